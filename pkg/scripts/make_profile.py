"""Generate the bundled synthetic YOLO-v3-like layer profile.

The real 106-layer spec is not reproduced here. Instead we lay out plausible
convolution shapes (416x416 input, darknet-style down-sampling, feature taps at
layers 37/62/75, 7-layer inference heads at 76/88/100) and close each segment
with one calibration layer whose FLOPs make the per-class loads land exactly
on the default NetCostModel lines. Fitting the result recovers L0, c1, c2 and
delta_s.

    python scripts/make_profile.py [out.json]
"""

import sys
from pathlib import Path

from fhei.profile import ConvLayerSpec, HierarchyProfile, NetCostModel, dump_profile, layer_flops

FEATURE_LAYERS = (37, 62, 75)
INFERENCE_STARTS = (76, 88, 100)
BLOCK = 7


def conv(k, m, h_in, h_out, out_bytes=None):
    return ConvLayerSpec(k, m, h_in, h_out, out_bytes or m * m * h_out * 4)


def calibration(flops, out_bytes):
    # stand-in for whatever remains of the segment: a 1x1 map with `flops` channels
    return ConvLayerSpec(1, 1, 1, int(flops), int(out_bytes))


def stage(m, h, repeats):
    layers = []
    for _ in range(repeats):
        layers += [conv(1, m, 2 * h, h), conv(3, m, h, 2 * h)]
    return layers


def build(model: NetCostModel = NetCostModel()) -> HierarchyProfile:
    comm = [sum(model.scale_sizes[: k + 1]) for k in range(3)]
    fn_target = [round(model.L0 + model.c1 * c) for c in comm]
    in_target = [round(model.c2 * c) for c in comm]

    seg1 = [conv(3, 416, 3, 32), conv(3, 208, 32, 64)] + stage(208, 32, 1)
    seg1 += [conv(3, 104, 64, 128)] + stage(104, 64, 2)
    seg1 += [conv(3, 52, 128, 256)] + stage(52, 128, 8)
    seg1 += [conv(1, 52, 256, 256)] * (36 - len(seg1))
    seg2 = [conv(3, 26, 256, 512)] + stage(26, 256, 8) + [conv(1, 26, 512, 512)] * 7
    seg3 = [conv(3, 13, 512, 1024)] + stage(13, 512, 4) + [conv(1, 13, 1024, 1024)] * 3

    layers = []
    prev_fn = 0
    for i, (seg, size, target) in enumerate(zip((seg1, seg2, seg3), model.scale_sizes, fn_target)):
        assert len(layers) + len(seg) + 1 == FEATURE_LAYERS[i], "segment length off"
        used = sum(layer_flops(x) for x in seg)
        rest = target - prev_fn - used
        assert rest > 0, "segment layers already exceed the FN target"
        layers += seg + [calibration(rest, size)]
        prev_fn = target

    heads = {0: (52, 256), 1: (26, 512), 2: (13, 1024)}
    for k, start in enumerate(INFERENCE_STARTS):
        while len(layers) < start - 1:
            layers.append(conv(1, 26, 256, 128))
        m, h = heads[k]
        head = [conv(3, m, h, h), conv(1, m, h, h // 2), conv(3, m, h // 2, h)] * 2
        rest = in_target[k] - sum(layer_flops(x) for x in head)
        assert rest > 0, "head layers already exceed the IN target"
        layers += head + [calibration(rest, m * m * 255 * 4)]

    return HierarchyProfile(
        layers=tuple(layers),
        feature_layers=FEATURE_LAYERS,
        inference_starts=INFERENCE_STARTS,
        inference_block_len=BLOCK,
        class_quality=tuple(model.delta_s * c for c in comm),
    )


if __name__ == "__main__":
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parents[1] / "src/fhei/data/yolo_like_profile.json"
    profile = build()
    assert len(profile.layers) == 106, len(profile.layers)
    dump_profile(profile, out)
    print(f"wrote {out} ({len(profile.layers)} layers)")
