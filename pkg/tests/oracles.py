"""Hand-rolled reference implementations, independent of the library code.

Everything here is written straight from the definitions (explicit loops,
spreadsheet-style sums) so it can serve as ground truth for the vectorized
implementations under ``src/``.
"""

import numpy as np


def conv2d_loops(x, k4, stride=1):
    """Direct 2-D convolution by explicit summation.

    Cross-correlation convention, zero padding of (k-1)/2 on every side,
    output spatial extents ceil(H/stride) x ceil(W/stride).  Kernel layout
    is [c_in, c_out, k, k].
    """
    ci, co, k, _ = k4.shape
    _, h, w = x.shape
    p = (k - 1) // 2
    oh = -(-h // stride)
    ow = -(-w // stride)
    out = np.zeros((co, oh, ow))
    for o in range(co):
        for oy in range(oh):
            for ox in range(ow):
                acc = 0.0
                for i in range(ci):
                    for ky in range(k):
                        for kx in range(k):
                            yy = oy * stride + ky - p
                            xx = ox * stride + kx - p
                            if 0 <= yy < h and 0 <= xx < w:
                                acc += x[i, yy, xx] * k4[i, o, ky, kx]
                out[o, oy, ox] = acc
    return out


def depthwise_loops(x, kernels, k, stride=1):
    """Per-channel convolution; ``kernels`` is (channels, k*k) with j = ky*k + kx."""
    c, h, w = x.shape
    p = (k - 1) // 2
    oh = -(-h // stride)
    ow = -(-w // stride)
    out = np.zeros((c, oh, ow))
    for ch in range(c):
        for oy in range(oh):
            for ox in range(ow):
                acc = 0.0
                for ky in range(k):
                    for kx in range(k):
                        yy = oy * stride + ky - p
                        xx = ox * stride + kx - p
                        if 0 <= yy < h and 0 <= xx < w:
                            acc += x[ch, yy, xx] * kernels[ch, ky * k + kx]
                out[ch, oy, ox] = acc
    return out


# VGG-16 (CIFAR variant) convolutional stack: (c_in, c_out) per 3x3 layer.
VGG16_CONV_LAYERS = [
    (3, 64), (64, 64),
    (64, 128), (128, 128),
    (128, 256), (256, 256), (256, 256),
    (256, 512), (512, 512), (512, 512),
    (512, 512), (512, 512), (512, 512),
]


def vgg16_params(scheme, rank=None):
    """Spreadsheet-style parameter sums over the VGG-16 conv stack."""
    total = 0
    for ci, co in VGG16_CONV_LAYERS:
        if scheme == "baseline":
            total += ci * co * 9
        elif scheme == "dp":
            total += (co + 9) * ci
        elif scheme == "pd":
            total += (ci + 9) * co
        elif scheme == "pdp":
            total += (ci + co + 9) * rank
        elif scheme == "shift":
            total += (ci + co) * rank
        else:
            raise ValueError(scheme)
    return total


def cr_percent(new, orig, aux=0):
    return 100.0 * (1.0 - (new + aux) / (orig + aux))
