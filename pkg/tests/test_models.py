import numpy as np
import pytest
import torch

from condmri import transforms as T
from condmri.models import (
    BackboneConfig,
    CheckpointError,
    DIDNLite,
    EnhancementModel,
    UNet,
    UnrolledConfig,
    UnrolledModel,
    ZeroFilledModel,
    channels_to_complex,
    complex_to_channels,
    count_params,
    fft2c_t,
    load_checkpoint,
    model_from_dict,
    save_checkpoint,
)


def measurement(rng, h, w, accel=4.0, center_frac=0.08):
    img = rng.normal(size=(h, w)) + 1j * rng.normal(size=(h, w))
    mask = T.make_cartesian_mask(h, w, accel, center_frac, seed=int(rng.integers(1 << 30)))
    ksp = T.apply_mask(T.fft2c(img), mask)
    return torch.from_numpy(ksp.data), mask


def unet_param_oracle(in_ch, out_ch, chans, pools):
    """Independent parameter enumeration from the layer formulas (3x3
    convs without bias, 2x2 transpose convs without bias, 1x1 final)."""

    def conv_block(ci, co):
        return 9 * ci * co + 9 * co * co

    total = conv_block(in_ch, chans)
    ch = chans
    for _ in range(pools - 1):
        total += conv_block(ch, ch * 2)
        ch *= 2
    total += conv_block(ch, ch * 2)  # bottleneck
    for _ in range(pools - 1):
        total += 4 * (ch * 2) * ch  # transpose conv
        total += conv_block(ch * 2, ch)
        ch //= 2
    total += 4 * (ch * 2) * ch
    total += conv_block(ch * 2, ch)
    total += ch * out_ch + out_ch  # final 1x1 with bias
    return total


class TestComplexChannels:
    def test_constant_split(self):
        x = torch.full((4, 4), 3.0 + 4.0j, dtype=torch.complex128)
        t = complex_to_channels(x)
        assert torch.all(t[0] == 3.0) and torch.all(t[1] == 4.0)
        mag = torch.sqrt(t[0] ** 2 + t[1] ** 2)
        assert torch.allclose(mag, torch.full((4, 4), 5.0).double())

    def test_round_trip_identity(self):
        torch.manual_seed(0)
        x = torch.randn(2, 8, 8, dtype=torch.complex64)
        assert torch.equal(channels_to_complex(complex_to_channels(x)), x)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            complex_to_channels(torch.randn(2, 8, 8))
        with pytest.raises(ValueError):
            channels_to_complex(torch.randn(3, 8, 8))


class TestBackbones:
    @pytest.mark.parametrize("kind", ["unet", "didn_lite"])
    @pytest.mark.parametrize("shape", [(64, 64), (320, 320), (50, 46)])
    def test_shape_contract(self, kind, shape):
        torch.manual_seed(0)
        net = (
            UNet(BackboneConfig("unet", 8, 2))
            if kind == "unet"
            else DIDNLite(BackboneConfig("didn_lite", 8, 2))
        )
        x = torch.randn(1, 2, *shape)
        assert net(x).shape == x.shape

    def test_full_scale_unet_parameter_count(self):
        net = UNet(BackboneConfig("unet", 32, 4))
        n = count_params(net)
        assert abs(n - 7.8e6) / 7.8e6 < 0.05

    def test_desk_unet_count_matches_enumeration_oracle(self):
        net = UNet(BackboneConfig("unet", 8, 2))
        assert count_params(net) == unet_param_oracle(2, 2, 8, 2)

    def test_too_small_input_rejected(self):
        net = UNet(BackboneConfig("unet", 8, 4))
        with pytest.raises(ValueError, match="too small"):
            net(torch.randn(1, 2, 8, 8))

    def test_conditioning_site_requires_flag(self):
        net = UNet(BackboneConfig("unet", 8, 2, conditioned=False))
        from condmri.models import ConditioningParams

        cond = ConditioningParams(torch.ones(32), torch.zeros(32))
        with pytest.raises(ValueError, match="conditioning"):
            net(torch.randn(1, 2, 16, 16), cond)

    def test_didn_predicts_pure_correction(self):
        # the global skip lives in the unrolled update x - f(x), so the
        # zeroed block must emit zero, not the identity
        cfg = BackboneConfig("didn_lite", 8, 2)
        net = DIDNLite(cfg)
        with torch.no_grad():
            for p in net.parameters():
                p.zero_()
        x = torch.randn(1, 2, 32, 32)
        assert torch.equal(net(x), torch.zeros_like(x))


class TestUnrolledModel:
    def test_zero_backbone_lambda_zero_is_zero_filled(self):
        rng = np.random.default_rng(0)
        y, mask = measurement(rng, 32, 32)
        for t_iters in (1, 3):
            cfg = UnrolledConfig(T=t_iters, backbone=BackboneConfig("unet", 4, 2))
            model = UnrolledModel(cfg).double()
            with torch.no_grad():
                for p in model.parameters():
                    p.zero_()
                out = model(y, mask, 0.0)
            zf = T.ifft2c(y.numpy())
            assert np.max(np.abs(out.numpy() - zf)) < 1e-10

    def test_t_zero_returns_zero_filled_init(self):
        rng = np.random.default_rng(1)
        y, mask = measurement(rng, 32, 32)
        model = UnrolledModel(UnrolledConfig(T=0, backbone=BackboneConfig("unet", 4, 2)))
        with torch.no_grad():
            out = model(y.to(torch.complex64), mask, 0.9)
        zf = T.ifft2c(y.numpy())
        assert np.max(np.abs(out.numpy() - zf)) < 1e-5

    def test_zero_backbone_is_repeated_dc(self):
        rng = np.random.default_rng(2)
        y, mask = measurement(rng, 16, 16)
        from condmri.models.dc import dc_step

        lam = 0.4
        cfg = UnrolledConfig(T=3, backbone=BackboneConfig("unet", 4, 2))
        model = UnrolledModel(cfg).double()
        with torch.no_grad():
            for p in model.parameters():
                p.zero_()
            out = model(y, mask, lam)
        x = torch.from_numpy(T.ifft2c(y.numpy()))
        for _ in range(3):
            x = dc_step(x, y, mask, lam)
        assert (out - x).abs().max().item() < 1e-10

    def test_hard_consistency_any_backbone(self):
        rng = np.random.default_rng(3)
        y, mask = measurement(rng, 32, 32)
        torch.manual_seed(1)
        cfg = UnrolledConfig(
            T=2, backbone=BackboneConfig("didn_lite", 4, 2), conditioned=True
        )
        model = UnrolledModel(cfg).double()
        with torch.no_grad():
            out = model(y, mask, 0.0)
        k_out = fft2c_t(out).numpy()
        sampled = mask.columns.astype(bool)
        assert np.max(np.abs(k_out[:, sampled] - y.numpy()[:, sampled])) < 1e-8

    def test_deterministic_forward(self):
        torch.set_num_threads(1)
        rng = np.random.default_rng(4)
        y, mask = measurement(rng, 32, 32)
        torch.manual_seed(2)
        model = UnrolledModel(
            UnrolledConfig(T=2, backbone=BackboneConfig("unet", 4, 2), conditioned=True)
        )
        y32 = y.to(torch.complex64)
        with torch.no_grad():
            a = model(y32, mask, 0.3)
            b = model(y32, mask, 0.3)
        assert torch.equal(a, b)

    def test_share_weights_single_backbone(self):
        cfg = UnrolledConfig(T=4, share_weights=True, backbone=BackboneConfig("unet", 4, 2))
        model = UnrolledModel(cfg)
        assert len(model.backbones) == 1
        cfg2 = UnrolledConfig(T=4, backbone=BackboneConfig("unet", 4, 2))
        assert len(UnrolledModel(cfg2).backbones) == 4

    def test_conditioned_output_varies_with_lambda_path(self):
        # same DC weight, different hypernet input is impossible by design
        # (one lambda per forward pass), so compare conditioned outputs at
        # two lambdas against the unconditioned DC-only difference
        rng = np.random.default_rng(5)
        y, mask = measurement(rng, 32, 32)
        torch.manual_seed(3)
        cfg = UnrolledConfig(
            T=2, backbone=BackboneConfig("unet", 4, 2), conditioned=True
        )
        model = UnrolledModel(cfg).double()
        with torch.no_grad():
            a = model(y, mask, 0.2)
            b = model(y, mask, 0.8)
        assert (a - b).abs().max().item() > 1e-8

    def test_enhancement_model_ignores_lambda(self):
        rng = np.random.default_rng(6)
        y, mask = measurement(rng, 32, 32)
        torch.manual_seed(4)
        model = EnhancementModel(BackboneConfig("unet", 4, 2)).double()
        with torch.no_grad():
            a = model(y, mask, 0.0)
            b = model(y, mask, 1.0)
            c = model(y, mask)
        assert torch.equal(a, b) and torch.equal(a, c)

    def test_zero_filled_model(self):
        rng = np.random.default_rng(7)
        y, mask = measurement(rng, 32, 32)
        out = ZeroFilledModel()(y, mask)
        assert np.max(np.abs(out.numpy() - T.ifft2c(y.numpy()))) < 1e-12


class TestCheckpointIO:
    def test_round_trip_bit_exact(self, tmp_path):
        torch.set_num_threads(1)
        rng = np.random.default_rng(8)
        y, mask = measurement(rng, 32, 32)
        torch.manual_seed(5)
        cfg = UnrolledConfig(
            T=2, backbone=BackboneConfig("didn_lite", 4, 2), conditioned=True
        )
        model = UnrolledModel(cfg)
        path = tmp_path / "model.pt"
        save_checkpoint(model, path, meta={"note": "test"})
        loaded, info = load_checkpoint(path)
        assert info["meta"]["note"] == "test"
        assert info["spec"]["model"] == "unrolled"
        y32 = y.to(torch.complex64)
        with torch.no_grad():
            assert torch.equal(model(y32, mask, 0.5), loaded(y32, mask, 0.5))

    def test_mismatch_rejected_with_keys(self, tmp_path):
        torch.manual_seed(6)
        model = UnrolledModel(
            UnrolledConfig(T=2, backbone=BackboneConfig("unet", 4, 2))
        )
        path = tmp_path / "model.pt"
        save_checkpoint(model, path)
        payload = torch.load(path, weights_only=False)
        # claim a different T than the weights describe
        spec = payload["model_json"].replace('"T": 2', '"T": 3')
        payload["model_json"] = spec
        torch.save(payload, path)
        with pytest.raises(CheckpointError, match="missing keys"):
            load_checkpoint(path)

    def test_shape_mismatch_rejected(self, tmp_path):
        torch.manual_seed(9)
        model = UnrolledModel(
            UnrolledConfig(T=1, backbone=BackboneConfig("unet", 4, 2))
        )
        path = tmp_path / "model.pt"
        save_checkpoint(model, path)
        payload = torch.load(path, weights_only=False)
        # same parameter names, different channel widths
        payload["model_json"] = payload["model_json"].replace(
            '"init_channels": 4', '"init_channels": 8'
        )
        torch.save(payload, path)
        with pytest.raises(CheckpointError, match="mismatch"):
            load_checkpoint(path)

    def test_unknown_config_keys_rejected(self):
        with pytest.raises(CheckpointError, match="unknown"):
            model_from_dict({"model": "unrolled", "config": {"T": 2, "bogus": 1}})

    def test_unreadable_rejected(self, tmp_path):
        path = tmp_path / "junk.pt"
        path.write_bytes(b"not a checkpoint")
        with pytest.raises(CheckpointError):
            load_checkpoint(path)


class TestFullModelGradient:
    def test_theta_gradients_match_finite_differences(self):
        torch.manual_seed(7)
        rng = np.random.default_rng(9)
        y, mask = measurement(rng, 16, 16, accel=2.0)
        gt = torch.from_numpy(rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16)))
        cfg = UnrolledConfig(
            T=2, backbone=BackboneConfig("unet", 4, 2), conditioned=True
        )
        model = UnrolledModel(cfg).double()

        def loss_fn():
            out = model(y, mask, 0.35)
            return (out - gt).abs().pow(2).sum()

        loss = loss_fn()
        model.zero_grad()
        loss.backward()

        gen = np.random.default_rng(10)
        params = [p for p in model.parameters() if p.requires_grad and p.grad is not None]
        h = 1e-5  # small enough to stay on one side of the LeakyReLU kinks
        checked = 0
        for p in params[:: max(1, len(params) // 8)]:
            flat = p.data.view(-1)
            idx = int(gen.integers(flat.numel()))
            orig = flat[idx].item()
            with torch.no_grad():
                flat[idx] = orig + h
                up = loss_fn().item()
                flat[idx] = orig - h
                down = loss_fn().item()
                flat[idx] = orig
            fd = (up - down) / (2 * h)
            an = p.grad.view(-1)[idx].item()
            if abs(fd) < 1e-8 and abs(an) < 1e-8:
                continue
            rel = abs(an - fd) / max(abs(fd), abs(an), 1e-12)
            assert rel < 1e-2, f"rel error {rel} at parameter element {idx}"
            checked += 1
        assert checked >= 4
