# Regenerates ssim_reference.inc with scikit-image.
import numpy as np
from skimage.metrics import structural_similarity


def lcg_image(seed, h, w, c):
    x = seed & 0xFFFFFFFF
    out = np.empty(h * w * c)
    for i in range(out.size):
        x = (1664525 * x + 1013904223) & 0xFFFFFFFF
        out[i] = (x >> 8) / float(1 << 24)
    return out.reshape(h, w, c)


rows = []
for i in range(10):
    h, w = 24 + 2 * i, 32 - i
    a = lcg_image(1000 + i, h, w, 3)
    n = lcg_image(2000 + i, h, w, 3)
    mix = 0.1 * i
    b = (1.0 - mix) * a + mix * n
    s = structural_similarity(a, b, gaussian_weights=True, sigma=1.5, use_sample_covariance=False,
                              data_range=1.0, channel_axis=2)
    rows.append((1000 + i, 2000 + i, h, w, mix, s))

with open("ssim_reference.inc", "w") as f:
    f.write("// seed_a, seed_b, height, width, mix, skimage ssim\n")
    for r in rows:
        f.write("{%d, %d, %d, %d, %.17g, %.17g},\n" % r)
