import numpy as np
import pytest

from ffdkit.errors import ParameterError, ShapeError, WeightsError
from ffdkit.imaging import ImageTensor
from ffdkit.inference import (
    BlockDef,
    FoldedNetwork,
    HeadDef,
    NetworkSpec,
    StemDef,
    default_spec,
    forward,
    ops,
    random_bundle,
    width_scaled_channels,
)

from oracles import conv2d_loops, depthwise_loops


def tiny_spec(pooling="flatten"):
    """3 inverted-residual instances on a 32x32 input."""
    return NetworkSpec(
        alpha=1.0,
        input_size=32,
        stem=StemDef(out_ch=8, kernel=3, stride=2),
        blocks=(BlockDef(t=1, c=8, n=1, s=1), BlockDef(t=6, c=16, n=2, s=2)),
        head=HeadDef(conv_ch=32, pooling=pooling),
    )


def random_image(rng, size):
    return ImageTensor(rng.random((size, size, 3), dtype=np.float64).astype(np.float32))


class TestWidthScaling:
    def test_alpha_one_is_identity_on_multiples_of_8(self):
        for base in (8, 16, 32, 64, 96, 160, 320, 1280):
            assert width_scaled_channels(1.0, base) == base

    def test_alpha_14_base_32(self):
        # oracle: max(8, floor(44.8 + 4) // 8 * 8) = 48; 48 >= 0.9 * 44.8
        assert width_scaled_channels(1.4, 32) == 48

    def test_alpha_14_base_16(self):
        # oracle on 22.4: floor(26.4) // 8 * 8 = 24
        assert width_scaled_channels(1.4, 16) == 24

    def test_never_below_8(self):
        assert width_scaled_channels(0.1, 8) == 8

    def test_bump_when_rounding_loses_over_10_percent(self):
        # alpha*base = 8.95 rounds down to 8, below 0.9 * 8.95 = 8.055 -> 16
        assert width_scaled_channels(1.11875, 8) == 16
        # alpha*base = 12 rounds UP to 16 already, no bump involved
        assert width_scaled_channels(0.75, 16) == 16

    def test_validation(self):
        with pytest.raises(ParameterError):
            width_scaled_channels(0.0, 8)
        with pytest.raises(ParameterError):
            width_scaled_channels(1.0, 0)


class TestNetworkSpec:
    def test_default_spec_channel_plan(self):
        spec = default_spec()
        assert spec.alpha == 1.4
        assert spec.input_size == 448
        assert spec.stem_channels == 48
        assert spec.head_channels == 1792
        plans = spec.block_plans()
        assert len(plans) == 17  # 1+2+3+4+3+3+1 block instances
        assert plans[0].expand is False  # t=1 block has no expansion conv
        assert all(p.expand for p in plans[1:])

    def test_json_round_trip(self, tmp_path):
        spec = tiny_spec()
        path = tmp_path / "spec.json"
        spec.to_file(path)
        assert NetworkSpec.from_file(path) == spec

    def test_shipped_spec_file_matches_default(self):
        from ffdkit.inference import default_spec_path

        assert NetworkSpec.from_file(default_spec_path()) == default_spec()

    def test_residual_only_on_stride1_same_channels(self):
        plans = default_spec().block_plans()
        for p in plans:
            assert p.residual == (p.stride == 1 and p.in_ch == p.out_ch)

    def test_pooling_validation(self):
        with pytest.raises(ParameterError):
            NetworkSpec(head=HeadDef(pooling="maxpool"))

    def test_feature_count_flatten_vs_gap(self):
        flat = tiny_spec("flatten")
        gap = tiny_spec("global_average")
        side = flat.feature_map_size()
        assert flat.feature_count() == side * side * 32
        assert gap.feature_count() == 32


class TestForward:
    def test_probability_contract(self):
        spec = tiny_spec()
        bundle = random_bundle(spec, seed=3)
        rng = np.random.default_rng(0)
        for _ in range(3):
            scores = forward(random_image(rng, 32), spec, bundle)
            total = scores.p_control + scores.p_alcohol + scores.p_drug + scores.p_sleep
            assert total == pytest.approx(1.0, abs=1e-6)

    def test_gap_head_also_valid(self):
        spec = tiny_spec("global_average")
        bundle = random_bundle(spec, seed=4)
        rng = np.random.default_rng(1)
        scores = forward(random_image(rng, 32), spec, bundle)
        assert 0.0 <= scores.p_control <= 1.0

    def test_wrong_input_size_rejected_before_compute(self):
        spec = tiny_spec()
        bundle = random_bundle(spec, seed=5)
        rng = np.random.default_rng(2)
        with pytest.raises(ShapeError, match="32"):
            forward(random_image(rng, 16), spec, bundle)

    def test_missing_tensor_rejected(self):
        spec = tiny_spec()
        bundle = random_bundle(spec, seed=6)
        del bundle.tensors["head/kernel"]
        with pytest.raises(WeightsError, match="head/kernel"):
            FoldedNetwork(spec, bundle)

    def test_wrong_shape_rejected(self):
        spec = tiny_spec()
        bundle = random_bundle(spec, seed=7)
        bundle.tensors["stem/kernel"] = bundle.tensors["stem/kernel"][:, :, :, :4]
        with pytest.raises(WeightsError, match="stem/kernel"):
            FoldedNetwork(spec, bundle)

    def test_nonpositive_variance_rejected(self):
        spec = tiny_spec()
        bundle = random_bundle(spec, seed=8)
        bundle.tensors["stem/var"] = np.zeros_like(bundle.tensors["stem/var"])
        with pytest.raises(WeightsError, match="var"):
            FoldedNetwork(spec, bundle)

    def test_matches_layer_by_layer_oracle(self):
        """Full tiny forward vs an independent loop-convolution composition."""
        spec = tiny_spec()
        bundle = random_bundle(spec, seed=11)
        rng = np.random.default_rng(12)
        image = random_image(rng, 32)

        eps = bundle.epsilon
        t = bundle.tensors

        def bn(name, x):
            g = t[f"{name}/gamma"].astype(np.float64)
            b = t[f"{name}/beta"].astype(np.float64)
            m = t[f"{name}/mean"].astype(np.float64)
            v = t[f"{name}/var"].astype(np.float64)
            return g * (x - m) / np.sqrt(v + eps) + b

        def relu6(x):
            return np.minimum(np.maximum(x, 0.0), 6.0)

        x = image.values.astype(np.float64)
        x = relu6(bn("stem", conv2d_loops(x, t["stem/kernel"], spec.stem.stride)))
        for plan in spec.block_plans():
            y = x
            if plan.expand:
                y = relu6(bn(f"{plan.name}/expand", conv2d_loops(y, t[f"{plan.name}/expand/kernel"], 1)))
            y = relu6(bn(f"{plan.name}/dw", depthwise_loops(y, t[f"{plan.name}/dw/kernel"], plan.stride)))
            y = bn(f"{plan.name}/project", conv2d_loops(y, t[f"{plan.name}/project/kernel"], 1))
            x = x + y if plan.residual else y
        x = relu6(bn("head", conv2d_loops(x, t["head/kernel"], 1)))
        feats = x.reshape(-1)
        logits = feats @ t["classifier/weight"].astype(np.float64) + t["classifier/bias"]
        e = np.exp(logits - logits.max())
        expected = e / e.sum()

        got = forward(image, spec, bundle).by_code()
        # code order is (alcohol, control, drug, sleep); classifier emits that order
        assert np.max(np.abs(got - expected)) < 1e-4

    def test_identity_initialized_block_passes_input_through(self):
        # t=1 block, stride 1, same channels: delta depthwise + zero projection
        # composes to the identity through the residual skip
        spec = NetworkSpec(
            alpha=1.0,
            input_size=8,
            stem=StemDef(out_ch=8, kernel=3, stride=1),
            blocks=(BlockDef(t=1, c=8, n=1, s=1),),
            head=HeadDef(conv_ch=8, pooling="global_average"),
        )
        bundle = random_bundle(spec, seed=13)
        eps = bundle.epsilon
        neutral_gamma = np.ones(8, dtype=np.float32)
        neutral_zero = np.zeros(8, dtype=np.float32)
        neutral_var = np.full(8, 1.0 - eps, dtype=np.float32)
        delta = np.zeros((3, 3, 8), dtype=np.float32)
        delta[1, 1, :] = 1.0
        for base, kernel in (("block00/dw", delta), ("block00/project", np.zeros((1, 1, 8, 8), dtype=np.float32))):
            bundle.tensors[f"{base}/kernel"] = kernel
            bundle.tensors[f"{base}/gamma"] = neutral_gamma
            bundle.tensors[f"{base}/beta"] = neutral_zero
            bundle.tensors[f"{base}/mean"] = neutral_zero
            bundle.tensors[f"{base}/var"] = neutral_var

        net = FoldedNetwork(spec, bundle)
        rng = np.random.default_rng(14)
        image = random_image(rng, 8)
        kernel, bias = net._stem
        after_stem = ops.relu6(ops.conv2d(image.values, kernel, stride=1) + bias)
        plan, expand, dw, project = net._blocks[0]
        y = after_stem
        dk, db = dw
        y = ops.relu6(ops.depthwise_conv2d(y, dk, stride=plan.stride) + db)
        pk, pb = project
        y = ops.conv2d(y, pk) + pb
        block_out = after_stem + y if plan.residual else y
        assert np.allclose(block_out, after_stem, atol=1e-6)

    def test_stride2_halves_spatial_dims(self):
        spec = tiny_spec()
        plans = spec.block_plans()
        assert plans[1].stride == 2 and plans[2].stride == 1
        # 32 -> stem /2 -> 16 -> block1 /2 -> 8
        assert spec.feature_map_size() == 8
