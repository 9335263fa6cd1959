"""Pure-numpy reference kernels for the time-stepping hot loops.

The compiled module _speedups implements linear_scan and affine_ivp_scan
with the same argument conventions; the package __init__ selects the
backend. All scans share one step rule per mode:

    uR[k]  = u[k] + jump at node k (when scheduled)
    uhat   = E uR[k] + w1 fL[k]
    u[k+1] = uhat + w2 (fR[k] - fL[k])    (ETD2; ETD1 stops at uhat)

with E = exp(-lam h), w1 = (1 - E)/lam, w2 = (lam h - 1 + E)/(h lam^2).
fL is the forcing at the post-jump left endpoint, fR the forcing at the
right endpoint; for state-dependent problems fR is evaluated at the ETD1
predictor uhat with the window top replaced the same way, which makes
the periodic solver's fixed point coincide with this explicit flow.

Delay integrals are jump-corrected trapezoidal window dots: with
tw[i] = (h/2) K(s_i) on window nodes s_0 = -r, ..., s_m = 0,

    dot(top k) = tw[0] uR[k-m] + sum_{i=1}^{m-1} tw[i] (u[k-m+i] + uR[k-m+i])
                 + tw[m] * top

so each cell starts from the right limit where a jump is recorded.
"""
import numpy as np

BACKEND = "python"


def linear_scan(E, w1, w2, fL, fR, jump_idx, jump_vals, x0, use_etd2):
    """Sequential ETD scan of u' + A u = f(t) with additive jumps.

    fL[k] is the forcing at node k, fR[k] the forcing at node k+1
    (ignored for ETD1). jump_idx lists strictly increasing node indices
    where jump_vals rows are added to the left limit before stepping.
    Returns u of shape (N+1, n) with u[0] = x0.
    """
    N, n = fL.shape
    u = np.empty((N + 1, n))
    u[0] = x0
    jp = 0
    nj = len(jump_idx)
    for k in range(N):
        uRk = u[k]
        if jp < nj and jump_idx[jp] == k:
            uRk = u[k] + jump_vals[jp]
            jp += 1
        if use_etd2:
            u[k + 1] = E * uRk + w1 * fL[k] + w2 * (fR[k] - fL[k])
        else:
            u[k + 1] = E * uRk + w1 * fL[k]
    return u


def affine_ivp_scan(E, w1, w2, tw, gain, g, u, uR, jump_idx, jump_map_idx,
                    impulse_cb, m, k_start, use_etd2, has_delay):
    """Sequential ETD scan of the affine delay problem, filling u and uR in place.

    u and uR are (T+1, n) arrays with nodes 0..k_start already holding the
    initial history (uR carrying its right limits). gain and g tabulate
    the state gain and additive forcing at every node. impulse_cb(map_idx,
    left) returns the jump at the listed absolute node indices, all of
    which must lie in [k_start, T-1]; uR[T] is the caller's business.
    """
    T = u.shape[0] - 1
    jp = 0
    nj = len(jump_idx)
    if has_delay:
        tw0 = tw[0]
        tw_top = tw[m]
        tw_mid = tw[1:m]
    for k in range(k_start, T):
        if jp < nj and jump_idx[jp] == k:
            uR[k] = u[k] + impulse_cb(jump_map_idx[jp], u[k])
            jp += 1
        else:
            uR[k] = u[k]
        uRk = uR[k]
        if has_delay:
            b = k - m
            base = tw0 * uR[b] + tw_mid @ u[b + 1:k] + tw_mid @ uR[b + 1:k]
            fL = gain[k] * uRk + base + tw_top * uRk + g[k]
        else:
            fL = gain[k] * uRk + g[k]
        uhat = E * uRk + w1 * fL
        if use_etd2:
            if has_delay:
                b2 = k + 1 - m
                base2 = (tw0 * uR[b2] + tw_mid @ u[b2 + 1:k + 1]
                         + tw_mid @ uR[b2 + 1:k + 1])
                fR = gain[k + 1] * uhat + base2 + tw_top * uhat + g[k + 1]
            else:
                fR = gain[k + 1] * uhat + g[k + 1]
            u[k + 1] = uhat + w2 * (fR - fL)
        else:
            u[k + 1] = uhat


def picard_forcing(E, w1, w2, tw, gain, g, u, uR, m, use_etd2, has_delay):
    """Predictor-consistent forcing arrays for one Picard sweep (vectorized).

    u and uR hold one period of the current iterate on N+1 nodes with
    u[N] = u[0]; windows wrap periodically. Returns (fL, fR) of shape
    (N, n): fL[k] is the forcing at node k with the post-jump top,
    fR[k] the forcing at node k+1 evaluated at the ETD1 predictor.
    For ETD1 the returned fR aliases fL and is ignored downstream.
    """
    N = u.shape[0] - 1
    uRN = uR[:N]
    if has_delay:
        # circular pad so the window with top node k is up[k : k+m+1]
        up = np.concatenate([u[N - m:N], u[:N]], axis=0)
        uRp = np.concatenate([uR[N - m:N], uR[:N]], axis=0)
        win_u = np.lib.stride_tricks.sliding_window_view(up, m + 1, axis=0)
        win_uR = np.lib.stride_tricks.sliding_window_view(uRp, m + 1, axis=0)
        # everything but the top term, which differs between fL and fR
        base = (tw[0] * win_uR[:, :, 0]
                + np.einsum("i,kni->kn", tw[1:m], win_u[:, :, 1:m])
                + np.einsum("i,kni->kn", tw[1:m], win_uR[:, :, 1:m]))
        fL = gain[:N, None] * uRN + base + tw[m] * uRN + g[:N]
        uhat = E[None, :] * uRN + w1[None, :] * fL
        if not use_etd2:
            return fL, fL
        base_next = np.roll(base, -1, axis=0)
        fR = gain[1:, None] * uhat + base_next + tw[m] * uhat + g[1:]
        return fL, fR
    fL = gain[:N, None] * uRN + g[:N]
    uhat = E[None, :] * uRN + w1[None, :] * fL
    if not use_etd2:
        return fL, fL
    fR = gain[1:, None] * uhat + g[1:]
    return fL, fR
