"""Slow reference implementations used to validate the library.

Everything here is written the obvious way: explicit loops, dense matrices,
shifted inner products. The point is that these share no vectorized code
path with the package, so agreement is evidence of correctness rather than
of copying the same bug twice.
"""

from __future__ import annotations

import numpy as np

from lccf.features import FeatureConfig, FeatureMap, extract_features
from lccf.kernel import (
    TrackerConfig,
    kernel_autocorrelation,
    kernel_crosscorrelation,
    solve_kcf,
)
from lccf.spectral import cosine_window, fft2, gaussian_response, ifft2


def naive_dft2(plane: np.ndarray) -> np.ndarray:
    """O(D^2) direct evaluation of the unnormalized forward 2-D DFT."""
    plane = np.asarray(plane, dtype=np.complex128)
    H, W = plane.shape
    out = np.zeros((H, W), dtype=np.complex128)
    for fr in range(H):
        for fc in range(W):
            acc = 0.0 + 0.0j
            for r in range(H):
                for c in range(W):
                    phase = -2j * np.pi * (fr * r / H + fc * c / W)
                    acc += plane[r, c] * np.exp(phase)
            out[fr, fc] = acc
    return out


def conv_matrix_2d(plane: np.ndarray) -> np.ndarray:
    """Dense circular-convolution matrix: (M h)[p] = sum_q plane[p-q] h[q]
    with 2-D indices wrapped modulo the plane shape, row-major flattening."""
    plane = np.asarray(plane, dtype=np.float64)
    H, W = plane.shape
    D = H * W
    M = np.zeros((D, D))
    for pr in range(H):
        for pc in range(W):
            for qr in range(H):
                for qc in range(W):
                    M[pr * W + pc, qr * W + qc] = plane[(pr - qr) % H, (pc - qc) % W]
    return M


def dense_mccf_spatial(xs: list[np.ndarray], ys: list[np.ndarray], lam: float) -> np.ndarray:
    """Spatial-domain ridge regression over explicit circulant blocks.

    Minimizes sum_i ||sum_k conv(x_ik, h_k) - y_i||^2 + lam * sum_k ||h_k||^2
    as one dense least-squares problem; returns h of shape (K, H, W).
    """
    K, H, W = np.asarray(xs[0]).shape
    D = H * W
    rows = [np.hstack([conv_matrix_2d(x[k]) for k in range(K)]) for x in xs]
    A = np.vstack(rows)
    y = np.concatenate([np.asarray(yi, dtype=np.float64).ravel() for yi in ys])
    lhs = A.T @ A + lam * np.eye(K * D)
    h = np.linalg.solve(lhs, A.T @ y)
    return h.reshape(K, H, W)


def dense_mccf_frequency(X: np.ndarray, Y: np.ndarray, lam: float) -> np.ndarray:
    """The frequency-domain normal equations as one dense KD x KD system.

    Index (k, d) maps to row k*D + d; off-bin entries are written explicitly
    as zeros so the solve really runs at full size. Returns h_hat (K, H, W).
    """
    N, K, H, W = X.shape
    D = H * W
    Xf = X.reshape(N, K, D)
    Yf = Y.reshape(N, D)
    M = np.zeros((K * D, K * D), dtype=np.complex128)
    rhs = np.zeros(K * D, dtype=np.complex128)
    for k in range(K):
        for d in range(D):
            rhs[k * D + d] = sum(np.conj(Xf[n, k, d]) * Yf[n, d] for n in range(N))
            for l in range(K):
                acc = sum(np.conj(Xf[n, k, d]) * Xf[n, l, d] for n in range(N))
                if k == l:
                    acc += lam
                M[k * D + d, l * D + d] = acc
    h = np.linalg.solve(M, rhs)
    return h.reshape(K, H, W)


def shifted_kernel_plane(z: np.ndarray, x: np.ndarray, kernel_sigma: float) -> np.ndarray:
    """Gaussian kernel between z and every cyclic shift of x, by direct
    inner products: k[tau] = exp(-max(0, |x|^2+|z|^2-2<z, roll(x,tau)>)/s^2).
    Inputs are (K, H, W) spatial feature tensors."""
    z = np.asarray(z, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    _, H, W = x.shape
    xx = float(np.sum(x * x))
    zz = float(np.sum(z * z))
    k = np.zeros((H, W))
    for tr in range(H):
        for tc in range(W):
            dot = float(np.sum(z * np.roll(x, (tr, tc), axis=(1, 2))))
            k[tr, tc] = np.exp(
                -max(0.0, xx + zz - 2.0 * dot) / (kernel_sigma * kernel_sigma)
            )
    return k


def dense_kernel_ridge(x: np.ndarray, y: np.ndarray, lam: float, kernel_sigma: float) -> np.ndarray:
    """Dual variables from the dense kernel matrix: (K_mat + lam I)^-1 y,
    K_mat the explicit circulant matrix generated by the shifted-kernel
    plane. Returns the spatial alpha plane."""
    kplane = shifted_kernel_plane(x, x, kernel_sigma)
    K_mat = conv_matrix_2d(kplane)
    D = K_mat.shape[0]
    alpha = np.linalg.solve(K_mat + lam * np.eye(D), np.asarray(y, dtype=np.float64).ravel())
    return alpha.reshape(kplane.shape)


def hog_reference(image: np.ndarray, config: FeatureConfig) -> np.ndarray:
    """Per-pixel loop HOG with the same conventions as the library: centered
    differences with replicated borders, unsigned orientations on [0, pi),
    two-bin linear interpolation, floor(dims/cell) grid, non-overlapping
    block tiles normalized by sqrt(energy + eps^2)."""
    image = np.asarray(image, dtype=np.float64)
    rows, cols = image.shape
    ch, cw = config.cell
    nbins = config.orientations
    n_cr, n_cc = rows // ch, cols // cw
    hist = np.zeros((nbins, n_cr, n_cc))
    bin_width = np.pi / nbins
    for i in range(n_cr * ch):
        for j in range(n_cc * cw):
            gx = image[i, min(j + 1, cols - 1)] - image[i, max(j - 1, 0)]
            gy = image[min(i + 1, rows - 1), j] - image[max(i - 1, 0), j]
            mag = np.hypot(gx, gy)
            theta = np.mod(np.arctan2(gy, gx), np.pi)
            pos = theta / bin_width
            lower = int(np.floor(pos))
            frac = pos - lower
            cr, cc = i // ch, j // cw
            hist[lower % nbins, cr, cc] += (1.0 - frac) * mag
            hist[(lower + 1) % nbins, cr, cc] += frac * mag
    br, bc = config.block[0] // ch, config.block[1] // cw
    out = hist.copy()
    for r0 in range(0, n_cr, br):
        for c0 in range(0, n_cc, bc):
            energy = 0.0
            for r in range(r0, min(r0 + br, n_cr)):
                for c in range(c0, min(c0 + bc, n_cc)):
                    energy += float(np.sum(hist[:, r, c] ** 2))
            div = np.sqrt(energy + 1e-5**2)
            for r in range(r0, min(r0 + br, n_cr)):
                for c in range(c0, min(c0 + bc, n_cc)):
                    out[:, r, c] = hist[:, r, c] / div
    return out


def hann_1d(n: int) -> np.ndarray:
    """Raised cosine from the closed form, w[i] = 0.5 - 0.5 cos(2 pi i/(n-1))."""
    return np.array([0.5 - 0.5 * np.cos(2.0 * np.pi * i / (n - 1)) for i in range(n)])


def plain_kcf_loop(
    frames: list[np.ndarray], init_bbox: tuple[int, int, int, int], config: TrackerConfig
) -> dict:
    """Textbook kernelized-correlation-filter tracker, written directly from
    the update equations: detect on the old box, re-center on the response
    peak, retrain the dual on the new crop, blend the template. No latent
    machinery anywhere. Returns per-frame boxes/scores plus the final model
    arrays so callers can compare the full state bit for bit.
    """
    frame = np.asarray(frames[0], dtype=np.float64)
    fh, fw = frame.shape
    x, y, w, h = (int(v) for v in init_bbox)
    x = min(max(x, 0), fw - w)
    y = min(max(y, 0), fh - h)

    cell = config.feature.cell[0] if config.feature.kind == "hog" else 1
    wh = max(int(h * config.padding), 2 * cell)
    ww = max(int(w * config.padding), 2 * cell)
    wh -= wh % cell
    ww -= ww % cell
    gh, gw = wh // cell, ww // cell
    hann = cosine_window(gw, gh)
    output_sigma = config.output_sigma_factor * np.sqrt(w * h) / cell
    centred = gaussian_response(gw, gh, (gh // 2, gw // 2), output_sigma**2)
    yhat = fft2(np.roll(centred.plane, (-(gh // 2), -(gw // 2)), axis=(0, 1)))

    def crop_features(frame, bbox):
        bx, by, bw, bh = bbox
        cy, cx = by + bh // 2, bx + bw // 2
        rr = np.clip(np.arange(cy - wh // 2, cy - wh // 2 + wh), 0, frame.shape[0] - 1)
        cc = np.clip(np.arange(cx - ww // 2, cx - ww // 2 + ww), 0, frame.shape[1] - 1)
        crop = frame[rr[:, None], cc[None, :]]
        if config.feature.kind == "gray":
            return extract_features(crop - 0.5, config.feature, window=hann)
        return extract_features(crop, config.feature, window=hann)

    bbox = (x, y, w, h)
    feat = crop_features(frame, bbox)
    template = feat.data.copy()
    alpha = solve_kcf(kernel_autocorrelation(feat, config.kernel_sigma), yhat, config.lam)

    records = [(0, bbox, 1.0, 0.0)]
    for i, raw in enumerate(frames[1:], start=1):
        frame = np.asarray(raw, dtype=np.float64)
        z = crop_features(frame, bbox)
        tmap = FeatureMap(data=template, cell_size=cell, config=config.feature)
        kzx = kernel_crosscorrelation(z, tmap, config.kernel_sigma)
        response = ifft2(kzx * alpha)
        idx = int(np.argmax(response))
        pr, pc = divmod(idx, response.shape[1])
        score = float(response[pr, pc])
        dr = pr if pr <= gh // 2 else pr - gh
        dc = pc if pc <= gw // 2 else pc - gw
        nx = min(max(bbox[0] + dc * cell, 0), fw - w)
        ny = min(max(bbox[1] + dr * cell, 0), fh - h)
        bbox = (nx, ny, w, h)
        x_new = crop_features(frame, bbox)
        kxx = kernel_autocorrelation(x_new, config.kernel_sigma)
        alpha_new = solve_kcf(kxx, yhat, config.lam).copy()
        eps = float(np.linalg.norm(alpha_new - alpha))
        alpha = alpha_new
        template = (1.0 - config.rho) * template + config.rho * x_new.data
        records.append((i, bbox, score, eps))
    return {"records": records, "alpha": alpha, "template": template}
