"""Slow reference implementations used to cross-check the vectorised code.

Nothing here shares code with the production paths: convolutions are
explicit loops, metric thresholds are recounted one at a time, and the
distance transform is exhaustive search. Keep inputs small.
"""
from __future__ import annotations

import math

import numpy as np


def conv2d_naive(x, weight, bias, stride=1, padding=0, dilation=1):
    """Six nested loops over (n, o, y, x) and the (c, i, j) reduction."""
    n, c, h, w = x.shape
    o, _, k, _ = weight.shape
    ho = (h + 2 * padding - dilation * (k - 1) - 1) // stride + 1
    wo = (w + 2 * padding - dilation * (k - 1) - 1) // stride + 1
    out = np.zeros((n, o, ho, wo))
    for b in range(n):
        for oc in range(o):
            for y in range(ho):
                for xx in range(wo):
                    acc = bias[oc]
                    for ic in range(c):
                        for i in range(k):
                            for j in range(k):
                                r = y * stride - padding + i * dilation
                                q = xx * stride - padding + j * dilation
                                if 0 <= r < h and 0 <= q < w:
                                    acc += weight[oc, ic, i, j] * x[b, ic, r, q]
                    out[b, oc, y, xx] = acc
    return out


def conv2d_taps(x, weight, bias, padding=0, dilation=1):
    """Stride-1 convolution as a sum of shifted channel contractions (for larger composed checks)."""
    n, c, h, w = x.shape
    o, _, k, _ = weight.shape
    ho = h + 2 * padding - dilation * (k - 1)
    wo = w + 2 * padding - dilation * (k - 1)
    xp = np.zeros((n, c, h + 2 * padding, w + 2 * padding))
    xp[:, :, padding:padding + h, padding:padding + w] = x
    out = np.broadcast_to(bias[None, :, None, None], (n, o, ho, wo)).copy()
    for i in range(k):
        for j in range(k):
            patch = xp[:, :, i * dilation:i * dilation + ho, j * dilation:j * dilation + wo]
            out += np.einsum("oc,nchw->nohw", weight[:, :, i, j], patch)
    return out


def inflate_kernel(weight, dilation):
    """Insert dilation-1 zeros between taps of a (o, c, k, k) kernel."""
    o, c, k, _ = weight.shape
    size = dilation * (k - 1) + 1
    out = np.zeros((o, c, size, size))
    out[:, :, ::dilation, ::dilation] = weight
    return out


def avg_pool_naive(x, k, stride=1, pad=0):
    """Border-excluded windowed mean."""
    n, c, h, w = x.shape
    ho = (h + 2 * pad - k) // stride + 1
    wo = (w + 2 * pad - k) // stride + 1
    out = np.zeros((n, c, ho, wo))
    for b in range(n):
        for ch in range(c):
            for y in range(ho):
                for xx in range(wo):
                    vals = [x[b, ch, r, q]
                            for r in range(y * stride - pad, y * stride - pad + k)
                            for q in range(xx * stride - pad, xx * stride - pad + k)
                            if 0 <= r < h and 0 <= q < w]
                    out[b, ch, y, xx] = sum(vals) / len(vals)
    return out


def bilinear_naive(img2d, out_h, out_w):
    """Half-pixel-centre bilinear sample of a 2-D array, one output pixel at a time."""
    h, w = img2d.shape
    out = np.zeros((out_h, out_w))
    for y in range(out_h):
        sy = max((y + 0.5) * h / out_h - 0.5, 0.0)
        y0 = min(math.floor(sy), h - 1)
        y1 = min(y0 + 1, h - 1)
        fy = sy - y0
        for x in range(out_w):
            sx = max((x + 0.5) * w / out_w - 0.5, 0.0)
            x0 = min(math.floor(sx), w - 1)
            x1 = min(x0 + 1, w - 1)
            fx = sx - x0
            top = (1 - fx) * img2d[y0, x0] + fx * img2d[y0, x1]
            bot = (1 - fx) * img2d[y1, x0] + fx * img2d[y1, x1]
            out[y, x] = (1 - fy) * top + fy * bot
    return out


def adaptive_conv_loops(f_r, f_g, d):
    """Quadruple loop over (n, c, h, w) on the zero-padded canvas, nine taps inside.

    ``f_g`` has nine planes shared by all channels. Output indices run over the
    padded canvas [d, H'+d) and are written back to [0, H').
    """
    n_, c_, h_, w_ = f_r.shape
    padded = np.zeros((n_, c_, h_ + 2 * d, w_ + 2 * d))
    padded[:, :, d:d + h_, d:d + w_] = f_r
    out = np.zeros((n_, c_, h_, w_))
    for n in range(n_):
        for c in range(c_):
            for h in range(d, h_ + d):
                for w in range(d, w_ + d):
                    acc = 0.0
                    for l in (-1, 0, 1):
                        for m in (-1, 0, 1):
                            acc += f_g[n, (l + 1) * 3 + (m + 1), h - d, w - d] * padded[n, c, h + l * d, w + m * d]
                    out[n, c, h - d, w - d] = acc
    return out


def adaptive_conv_grouped_loops(f_r, raw, d):
    """Channel c filtered by planes 9c..9c+8 of ``raw``, one shared-field call per channel."""
    return np.concatenate([adaptive_conv_loops(f_r[:, c:c + 1], raw[:, 9 * c:9 * c + 9], d)
                           for c in range(f_r.shape[1])], axis=1)


def dense_block_reference(x, params, conv=conv2d_taps):
    feats = [x]
    for layer in params.layers:
        pre = conv(np.concatenate(feats, axis=1), layer.weight, layer.bias, padding=layer.padding)
        feats.append(np.maximum(pre, 0.0))
    proj = params.proj
    return conv(np.concatenate(feats, axis=1), proj.weight, proj.bias, padding=proj.padding)


def ddpm_reference(f_drgb, f_tm, params, conv=conv2d_taps):
    r = conv(f_drgb, params.reduce.weight, params.reduce.bias)
    branches = [adaptive_conv_grouped_loops(r, dense_block_reference(f_tm, kgu, conv), 2 * j - 1)
                for j, kgu in enumerate(params.kgu, start=1)]
    fuse = params.fuse
    return conv(np.concatenate([r] + branches, axis=1), fuse.weight, fuse.bias, padding=fuse.padding)


def encoder_reference(image, params, conv=conv2d_taps):
    outs, x = [], image
    for s, stage in enumerate(params.stages):
        if s > 0:
            n, c, h, w = x.shape
            x = x.reshape(n, c, h // 2, 2, w // 2, 2).mean(axis=(3, 5))
        x = np.maximum(conv(x, stage.weight, stage.bias, padding=stage.padding), 0.0)
        outs.append(x)
    return [conv(outs[i - 1], r.weight, r.bias) for i, r in zip((3, 4, 5), params.reduce)]


# ---------------------------------------------------------------------------
# metrics


def confusion_at(pred_u8, gt_bin, t):
    """(TP, FP, FN) for B = pred_u8 > t, counted pixel by pixel."""
    tp = fp = fn = 0
    for p, g in zip(np.ravel(pred_u8), np.ravel(gt_bin)):
        b = int(p) > t
        if b and g:
            tp += 1
        elif b and not g:
            fp += 1
        elif g:
            fn += 1
    return tp, fp, fn


def pr_sweep_bruteforce(pred_u8, gt_bin, beta2=0.3):
    """Per-threshold recount; returns (precision, recall, f) lists of length 256."""
    precision, recall, f = [], [], []
    for t in range(256):
        tp, fp, fn = confusion_at(pred_u8, gt_bin, t)
        pre = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        den = beta2 * pre + rec
        precision.append(pre)
        recall.append(rec)
        f.append((1 + beta2) * pre * rec / den if den else 0.0)
    return precision, recall, f


def _mean(vals):
    return sum(vals) / len(vals)


def s_measure_literal(pred, gt_bin, alpha=0.5):
    eps = np.spacing(1.0)
    pred = [[float(v) for v in row] for row in pred]
    gt = [[bool(v) for v in row] for row in gt_bin]
    h, w = len(gt), len(gt[0])
    fg_ratio = sum(sum(row) for row in gt) / (h * w)
    if fg_ratio == 0:
        return max(0.0, min(1.0, 1 - _mean([v for row in pred for v in row])))
    if fg_ratio == 1:
        return max(0.0, min(1.0, _mean([v for row in pred for v in row])))

    def obj(vals):
        if not vals:
            return 0.0
        x = _mean(vals)
        sd = math.sqrt(sum((v - x) ** 2 for v in vals) / (len(vals) - 1)) if len(vals) > 1 else 0.0
        return 2 * x / (x * x + 1 + sd + eps)

    fg_vals = [pred[i][j] for i in range(h) for j in range(w) if gt[i][j]]
    bg_vals = [1 - pred[i][j] for i in range(h) for j in range(w) if not gt[i][j]]
    s_o = fg_ratio * obj(fg_vals) + (1 - fg_ratio) * obj(bg_vals)

    pts = [(i, j) for i in range(h) for j in range(w) if gt[i][j]]
    cy = int(round(_mean([p[0] for p in pts]))) + 1
    cx = int(round(_mean([p[1] for p in pts]))) + 1

    def ssim(rows, cols):
        xs = [pred[i][j] for i in rows for j in cols]
        ys = [float(gt[i][j]) for i in rows for j in cols]
        n = len(xs)
        if n == 0:
            return 0.0
        mx, my = _mean(xs), _mean(ys)
        dof = max(n - 1, 1)
        vx = sum((a - mx) ** 2 for a in xs) / dof
        vy = sum((b - my) ** 2 for b in ys) / dof
        cxy = sum((a - mx) * (b - my) for a, b in zip(xs, ys)) / dof
        a_ = 4 * mx * my * cxy
        b_ = (mx * mx + my * my) * (vx + vy)
        if a_ != 0:
            return a_ / (b_ + eps)
        return 1.0 if b_ == 0 else 0.0

    area = h * w
    top, bottom = range(0, cy), range(cy, h)
    left, right = range(0, cx), range(cx, w)
    w1 = cx * cy / area
    w2 = cy * (w - cx) / area
    w3 = (h - cy) * cx / area
    w4 = 1 - w1 - w2 - w3
    s_r = w1 * ssim(top, left) + w2 * ssim(top, right) + w3 * ssim(bottom, left) + w4 * ssim(bottom, right)
    return max(0.0, min(1.0, alpha * s_o + (1 - alpha) * s_r))


def e_measure_literal(pred, gt_bin):
    vals = [float(v) for v in np.ravel(pred)]
    gs = [1.0 if v else 0.0 for v in np.ravel(gt_bin)]
    thr = min(2 * _mean(vals), 1.0)
    bs = [1.0 if (v >= thr if thr > 0 else v > 0) else 0.0 for v in vals]
    mb, mg = _mean(bs), _mean(gs)
    constant_gt = all(g - mg == 0 for g in gs)
    total = 0.0
    for b, g in zip(bs, gs):
        pb, pg = b - mb, g - mg
        if constant_gt:
            xi = 1.0 if b == g else -1.0
        else:
            den = pb * pb + pg * pg
            xi = 2 * pb * pg / den if den else 0.0
        total += (xi + 1) ** 2 / 4
    return total / len(bs)


def wfm_literal(pred, gt_bin, beta2=1.0):
    """Weighted F-measure with exhaustive nearest-foreground search and loop convolution.

    Ties in the nearest foreground pixel are broken by row-major order; use
    inputs whose foreground error is constant when comparing to other tie rules.
    """
    eps = np.spacing(1.0)
    pred = np.asarray(pred, dtype=float)
    gt = np.asarray(gt_bin, dtype=bool)
    h, w = gt.shape
    fg = [(i, j) for i in range(h) for j in range(w) if gt[i, j]]
    if not fg:
        return 0.0
    err = np.abs(pred - gt)
    dist = np.zeros((h, w))
    err_t = err.copy()
    for i in range(h):
        for j in range(w):
            if gt[i, j]:
                continue
            best, bi, bj = None, 0, 0
            for fi, fj in fg:
                d2 = (fi - i) ** 2 + (fj - j) ** 2
                if best is None or d2 < best:
                    best, bi, bj = d2, fi, fj
            dist[i, j] = math.sqrt(best)
            err_t[i, j] = err[bi, bj]
    ker = np.zeros((7, 7))
    for a in range(7):
        for b in range(7):
            ker[a, b] = math.exp(-((a - 3) ** 2 + (b - 3) ** 2) / (2 * 25.0))
    ker /= ker.sum()
    err_a = np.zeros((h, w))
    for i in range(h):
        for j in range(w):
            acc = 0.0
            for a in range(7):
                for b in range(7):
                    r = min(max(i + a - 3, 0), h - 1)  # replicate border
                    q = min(max(j + b - 3, 0), w - 1)
                    acc += ker[a, b] * err_t[r, q]
            err_a[i, j] = acc
    tp_w = fp_w = fg_ew = 0.0
    for i in range(h):
        for j in range(w):
            if gt[i, j]:
                e = err_a[i, j] if err_a[i, j] < err[i, j] else err[i, j]
                fg_ew += e
            else:
                fp_w += err[i, j] * (2 - math.exp(math.log(0.5) / 5 * dist[i, j]))
    tp_w = len(fg) - fg_ew
    recall = 1 - fg_ew / len(fg)
    precision = tp_w / (tp_w + fp_w + eps)
    q = (1 + beta2) * recall * precision / (recall + beta2 * precision + eps)
    return max(0.0, min(1.0, q))
