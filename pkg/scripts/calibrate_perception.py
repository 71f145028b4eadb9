"""Offline calibration of the prototype segmenter defaults.

Stage 1 picks ``hue_scale``: the hue/excess-green weighting that minimizes the
mean per-class error on flat noisy patches of the three class colors.
Stage 2 picks ``sigma`` and ``temperature`` on the default field: unblurred
captures should score a mean confidence near 0.90 and 9-px blurred captures
near 0.65, while bare soil must keep a non-negative gain for k <= 5 (stray
false positives with low confidence must not slow the aircraft over soil).

Prints both sweeps and the chosen values; run it after changing the color
model and copy the result into SegmenterConfig and configs/default.yaml.
"""

import itertools

import numpy as np

from activescan.controller import confidence_level, coverage_ratio, gain
from activescan.perception import PrototypeSegmenter, SegmenterConfig
from activescan.sensor import CameraModel, apply_motion_blur, capture
from activescan.worldgen import ColorModel, FieldSpec, Region, generate_field

HUE_SCALES = (60.0, 90.0, 120.0, 150.0, 200.0, 250.0)
SIGMAS = (0.1, 0.125, 0.15, 0.2)
TEMPERATURES = (0.08, 0.1, 0.12, 0.15, 0.2)
TARGET_SHARP, TARGET_BLURRED = 0.90, 0.65


def noise_patches(colors: ColorModel, n: int = 200, seed: int = 0) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    out = []
    for rgb in (colors.soil, colors.crop, colors.weed):
        patch = np.asarray(rgb, dtype=np.float64) + rng.normal(0.0, colors.noise_sigma, (n, n, 3))
        out.append(np.clip(np.rint(patch), 0, 255).astype(np.uint8))
    return out


def patch_errors(cfg: SegmenterConfig, patches: list[np.ndarray]) -> list[float]:
    seg = PrototypeSegmenter(cfg)
    return [float(np.mean(seg(p).class_map != label)) for label, p in enumerate(patches)]


def mean_stats(seg, images, k):
    cl, G = [], []
    for im in images:
        r = seg(apply_motion_blur(im, k, (0.0, 1.0)))
        c = confidence_level(r)
        cl.append(c)
        G.append(gain(coverage_ratio(r), c).G)
    return float(np.mean(cl)), float(np.mean(G))


def main() -> None:
    patches = noise_patches(ColorModel())
    print("stage 1: per-class error on noise patches (soil, crop, weed)")
    best_hs, best_err = None, np.inf
    for hs in HUE_SCALES:
        errs = patch_errors(SegmenterConfig(hue_scale=hs), patches)
        print(f"  hue_scale={hs:6.1f}  " + "  ".join(f"{e:.4f}" for e in errs) + f"  mean={np.mean(errs):.4f}")
        if np.mean(errs) < best_err:
            best_hs, best_err = hs, float(np.mean(errs))
    print(f"  -> hue_scale={best_hs}")

    cam = CameraModel()
    field = generate_field(FieldSpec(width_m=30.0, height_m=12.0, seed=3))
    bare = generate_field(FieldSpec(width_m=30.0, height_m=12.0, seed=5,
                                    regions=(Region("bare", 0.0, 0.0, 30.0, 12.0, False, 0.0),)))
    veg_images = [capture(field, cam, (x, 6.0)) for x in (7.0, 15.0, 23.0)]
    bare_images = [capture(bare, cam, (x, 6.0)) for x in (7.0, 15.0, 23.0)]

    print("stage 2: mean cl at k=1 / k=9 on the default field; bare-soil G at k=1,3,5")
    best, best_score = None, np.inf
    for sigma, temp in itertools.product(SIGMAS, TEMPERATURES):
        seg = PrototypeSegmenter(SegmenterConfig(sigma=sigma, temperature=temp, hue_scale=best_hs))
        cl1, _ = mean_stats(seg, veg_images, 1)
        cl9, _ = mean_stats(seg, veg_images, 9)
        bare_g = [mean_stats(seg, bare_images, k)[1] for k in (1, 3, 5)]
        ok = min(bare_g) >= 0.0
        score = abs(cl1 - TARGET_SHARP) + abs(cl9 - TARGET_BLURRED)
        print(f"  sigma={sigma:<6} T={temp:<5} cl1={cl1:.3f} cl9={cl9:.3f} "
              f"bareG=" + ",".join(f"{g:+.2f}" for g in bare_g) + f" score={score:.3f}{'' if ok else '  (rejected)'}")
        if ok and score < best_score:
            best, best_score = (sigma, temp), score
    print(f"  -> sigma={best[0]} temperature={best[1]}")
    print(f"chosen: SegmenterConfig(sigma={best[0]}, temperature={best[1]}, hue_scale={best_hs})")


if __name__ == "__main__":
    main()
