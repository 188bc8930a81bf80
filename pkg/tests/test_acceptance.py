"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with ``pytest tests/test_acceptance.py -v -s``).

The desk-scale criteria share one trained model via a session fixture:
200 synthetic 64x64 phantoms, a T=2 8-channel lambda-conditioned model,
30 epochs on CPU.
"""

import itertools
import time
from contextlib import contextmanager

import numpy as np
import pytest
import torch

from condmri import data as D
from condmri import metrics
from condmri import transforms as T
from condmri.evaluate import evaluate_grid, report_to_csv, reconstruct_slice
from condmri.losses import recon_loss
from condmri.models import (
    BackboneConfig,
    CascadeHypernet,
    UnrolledConfig,
    UnrolledModel,
    adain,
    load_checkpoint,
)
from condmri.models.conditioning import ConditioningParams
from condmri.models.dc import dc_step
from condmri.scheduler import STRATEGIES, ScheduleState, sample_lambda
from condmri.training import TrainConfig, train

DESK_SEED = 21


@contextmanager
def criterion(name: str):
    start = time.monotonic()
    try:
        yield
    except BaseException:
        print(f"[FAIL] {name}")
        raise
    print(f"[PASS] {name} ({time.monotonic() - start:.1f}s)")


@pytest.fixture(scope="session")
def desk_run(tmp_path_factory):
    """Dataset + trained Cond model shared by the desk-scale criteria."""
    root = tmp_path_factory.mktemp("desk")
    dataset = D.make_dataset(
        200, 64, 4, 0.08, seed=DESK_SEED, split_fractions=(0.6, 0.2, 0.2),
        out_dir=root / "ds",
    )
    model_cfg = UnrolledConfig(
        T=2, backbone=BackboneConfig("unet", 8, 2), conditioned=True
    )
    train_cfg = TrainConfig(
        epochs=30,
        batch_size=4,
        lr=2e-3,
        loss_weights=(4000.0, 1.0),  # lift l1 to the raw-scan magnitude scale
        scheduler=ScheduleState(strategy="cosine_annealed", phi=20.0, eps_scale=0.05),
        seed=0,
        deterministic=True,
    )
    t0 = time.monotonic()
    result = train(dataset, model_cfg, train_cfg, root / "run")
    seconds = time.monotonic() - t0

    zf_psnrs = []
    for rec in dataset.records("val"):
        ksp = T.apply_mask(rec.kspace_full.astype(np.complex128), rec.mask)
        gt = rec.image_gt
        zf_psnrs.append(
            metrics.cap_psnr(metrics.psnr(T.zero_filled_recon(ksp), gt, float(np.abs(gt).max())))
        )
    return {
        "dataset": dataset,
        "result": result,
        "train_seconds": seconds,
        "zero_filled_val_psnr": float(np.mean(zf_psnrs)),
    }


class TestAcceptance:
    def test_dc_identities(self):
        with criterion("DC identities (lambda=1 passthrough, lambda=0 hard DC)"):
            start = time.monotonic()
            rng = np.random.default_rng(0)
            for _ in range(100):
                x = torch.from_numpy(
                    rng.normal(size=(32, 32)) + 1j * rng.normal(size=(32, 32))
                )
                mask = T.make_cartesian_mask(32, 32, 4, 0.1, seed=int(rng.integers(1 << 30)))
                y = torch.from_numpy(
                    T.apply_mask(
                        T.fft2c(rng.normal(size=(32, 32)) + 1j * rng.normal(size=(32, 32))),
                        mask,
                    ).data
                )
                passthrough = dc_step(x, y, mask, 1.0)
                assert (passthrough - x).abs().max().item() < 1e-8

                hard = dc_step(x, y, mask, 0.0)
                k_hard = T.fft2c(hard.numpy())
                sampled = mask.columns.astype(bool)
                assert np.max(np.abs(k_hard[:, sampled] - y.numpy()[:, sampled])) < 1e-8
            assert time.monotonic() - start < 1.0

    def test_fft_suite(self):
        with criterion("FFT suite (round-trip, Parseval, linearity @ 1e-10)"):
            start = time.monotonic()
            rng = np.random.default_rng(1)
            for size in (16, 64):
                x = rng.normal(size=(size, size)) + 1j * rng.normal(size=(size, size))
                z = rng.normal(size=(size, size)) + 1j * rng.normal(size=(size, size))
                assert np.max(np.abs(T.ifft2c(T.fft2c(x)) - x)) < 1e-10
                assert (
                    abs(np.linalg.norm(T.fft2c(x)) - np.linalg.norm(x)) < 1e-10
                )
                a, b = 0.7 - 1.1j, -2.3 + 0.4j
                lin = T.fft2c(a * x + b * z) - (a * T.fft2c(x) + b * T.fft2c(z))
                assert np.max(np.abs(lin)) < 1e-10
            assert time.monotonic() - start < 1.0

    def test_adain_moments(self):
        with criterion("AdaIN moments (mean=beta, std=|gamma| @ 1e-4, 1000 maps)"):
            start = time.monotonic()
            rng = np.random.default_rng(2)
            for _ in range(1000):
                c = int(rng.integers(1, 5))
                z = torch.from_numpy(rng.normal(0, rng.uniform(0.5, 2.0), size=(c, 8, 8)))
                gamma = torch.from_numpy(rng.uniform(-3, 3, c))
                beta = torch.from_numpy(rng.uniform(-3, 3, c))
                out = adain(z, ConditioningParams(gamma, beta))
                assert torch.allclose(out.mean(dim=(-2, -1)), beta, atol=1e-4)
                stds = out.var(dim=(-2, -1), unbiased=False).sqrt()
                assert torch.allclose(stds, gamma.abs(), atol=1e-4)
            flat = torch.full((3, 8, 8), 2.5)
            out = adain(flat, ConditioningParams(torch.ones(3), torch.zeros(3)))
            assert torch.all(torch.isfinite(out))
            assert time.monotonic() - start < 5.0

    def test_gradient_checks(self):
        with criterion("Gradient checks (dc_step, adain.hypernet, full desk model)"):
            start = time.monotonic()
            rng = np.random.default_rng(3)

            # dc_step, central differences with step 1e-4, rel < 1e-3
            x = torch.from_numpy(rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16)))
            mask = T.make_cartesian_mask(16, 16, 2, 0.1, seed=4)
            y = torch.from_numpy(
                T.apply_mask(T.fft2c(rng.normal(size=(16, 16)) + 0j), mask).data
            )
            tgt = torch.from_numpy(rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16)))

            def dc_loss(x_in, lam_in):
                return (dc_step(x_in, y, mask, lam_in) - tgt).abs().pow(2).sum()

            lam = torch.tensor(0.41, dtype=torch.float64, requires_grad=True)
            x_leaf = x.clone().requires_grad_(True)
            dc_loss(x_leaf, lam).backward()
            h = 1e-4
            fd_lam = (dc_loss(x, 0.41 + h) - dc_loss(x, 0.41 - h)) / (2 * h)
            assert abs(lam.grad.item() - fd_lam.item()) / abs(fd_lam.item()) < 1e-3
            e = torch.zeros_like(x)
            e[5, 9] = h
            fd_re = (dc_loss(x + e, 0.41) - dc_loss(x - e, 0.41)) / (2 * h)
            rel = abs(x_leaf.grad[5, 9].real - fd_re).item() / abs(fd_re).item()
            assert rel < 1e-3

            # adain o hypernet w.r.t. lambda, step 1e-4, rel < 1e-3
            torch.manual_seed(4)
            net = CascadeHypernet(num_cascades=1, channels=4).double()
            z = torch.from_numpy(rng.normal(size=(4, 8, 8)))
            zt = torch.from_numpy(rng.normal(size=(4, 8, 8)))

            def cond_loss(lam_in):
                return ((adain(z, net(lam_in)[0]) - zt) ** 2).sum()

            lam2 = torch.tensor(0.63, dtype=torch.float64, requires_grad=True)
            cond_loss(lam2).backward()
            fd2 = (cond_loss(0.63 + h) - cond_loss(0.63 - h)) / (2 * h)
            assert abs(lam2.grad.item() - fd2.item()) / abs(fd2.item()) < 1e-3

            # full T=2 desk model w.r.t. a sampled subset of theta, rel < 1e-2
            torch.manual_seed(5)
            model = UnrolledModel(
                UnrolledConfig(T=2, backbone=BackboneConfig("unet", 4, 2), conditioned=True)
            ).double()
            y16 = torch.from_numpy(
                T.apply_mask(
                    T.fft2c(rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))),
                    mask,
                ).data
            )
            gt16 = torch.from_numpy(rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16)))

            def model_loss():
                return recon_loss(model(y16, mask, 0.35), gt16, weights=(1.0, 0.0))

            model.zero_grad()
            model_loss().backward()
            params = [p for p in model.parameters() if p.grad is not None]
            h_theta = 1e-5  # stays on one side of the LeakyReLU kinks
            checked = 0
            gen = np.random.default_rng(6)
            for p in params[:: max(1, len(params) // 10)]:
                flat = p.data.view(-1)
                idx = int(gen.integers(flat.numel()))
                orig = flat[idx].item()
                with torch.no_grad():
                    flat[idx] = orig + h_theta
                    up = model_loss().item()
                    flat[idx] = orig - h_theta
                    down = model_loss().item()
                    flat[idx] = orig
                fd = (up - down) / (2 * h_theta)
                an = p.grad.view(-1)[idx].item()
                if abs(fd) < 1e-10 and abs(an) < 1e-10:
                    continue
                assert abs(an - fd) / max(abs(fd), abs(an)) < 1e-2
                checked += 1
            assert checked >= 5
            assert time.monotonic() - start < 60.0

    def test_mask_statistics(self):
        with criterion("Mask statistics (80 columns, 25 center, 1000 seeds)"):
            start = time.monotonic()
            lo, hi = T.center_block(320, 0.08)
            assert hi - lo == 25
            for seed in range(1000):
                mask = T.make_cartesian_mask(320, 320, 4, 0.08, seed=seed)
                assert mask.num_sampled == 80
                assert np.all(mask.columns[lo:hi] == 1)
            assert time.monotonic() - start < 5.0

    def test_scheduler_contracts(self):
        with criterion("Scheduler (clamped draws, literal cos=1 at e=0, annealed monotone)"):
            start = time.monotonic()
            rng = np.random.default_rng(7)
            for strategy in STRATEGIES:
                state = ScheduleState(strategy=strategy, epoch=17, eps_scale=0.5)
                for _ in range(25_000):
                    lam = sample_lambda(state, rng)
                    assert 0.0 <= lam <= 1.0

            literal = ScheduleState(strategy="cosine_literal", epoch=0, phi=100.0, eps_scale=0.0)
            assert sample_lambda(literal, rng) == 1.0

            values = [
                sample_lambda(
                    ScheduleState(strategy="cosine_annealed", epoch=e, eps_scale=0.0), rng
                )
                for e in range(0, 120)
            ]
            assert all(a >= b for a, b in zip(values, values[1:]))
            assert time.monotonic() - start < 5.0

    def test_metrics_oracles(self):
        with criterion("Metrics oracles (PSNR 20 dB exact, SSIM identity/symmetry/oracle)"):
            start = time.monotonic()
            rng = np.random.default_rng(8)
            ref = rng.random((32, 32)) * 0.8
            assert metrics.psnr(ref + 0.1, ref, data_range=1.0) == pytest.approx(
                20.0, abs=1e-12
            )

            x = rng.random((32, 32))
            assert metrics.ssim(x, x) == 1.0
            noisy = np.clip(x + rng.normal(0, 0.1, x.shape), 0, 1)
            assert abs(metrics.ssim(x, noisy) - metrics.ssim(noisy, x)) < 1e-12

            from test_metrics import windowed_ssim_oracle

            expected = windowed_ssim_oracle(noisy, x, 1.0)
            assert metrics.ssim(noisy, x, data_range=1.0) == pytest.approx(
                expected, abs=1e-6
            )
            assert time.monotonic() - start < 5.0

    def test_desk_training_beats_zero_filled(self, desk_run):
        with criterion("Desk training (+3 dB over zero-filled, lambda-sensitive output)"):
            assert desk_run["train_seconds"] < 30 * 60
            zf = desk_run["zero_filled_val_psnr"]
            final = desk_run["result"].final_val_psnr
            print(
                f"    zero-filled {zf:.2f} dB -> trained {final:.2f} dB "
                f"(+{final - zf:.2f} dB in {desk_run['train_seconds']:.0f}s)"
            )
            assert final >= zf + 3.0

            model, _ = load_checkpoint(desk_run["result"].best_checkpoint)
            rec = desk_run["dataset"].records("test")[0]
            ksp = T.apply_mask(rec.kspace_full.astype(np.complex128), rec.mask)
            outs = [np.abs(reconstruct_slice(model, ksp, lam)) for lam in (0.0, 0.5, 1.0)]
            norm = np.linalg.norm(outs[0])
            max_pairwise = max(
                np.linalg.norm(a - b) for a, b in itertools.combinations(outs, 2)
            )
            assert max_pairwise > 1e-3 * norm

    def test_robustness_trend(self, desk_run):
        with criterion("Robustness trend (PSNR strictly drops from sigma=1e-5 to 1e-4)"):
            start = time.monotonic()
            model, _ = load_checkpoint(desk_run["result"].best_checkpoint)
            lambdas = [0.1, 0.5, 0.9]
            sigmas = [1e-5, 5e-5, 1e-4]
            report = evaluate_grid(
                {"cond": model}, lambdas, sigmas, desk_run["dataset"],
                split="test", seed=DESK_SEED,
            )
            assert len(report.rows) == 9
            for row in report.rows:
                assert np.isfinite(row.psnr_db) and np.isfinite(row.ssim)
            for lam in lambdas:
                low_noise = report.row("cond", lam, 1e-5).psnr_db
                high_noise = report.row("cond", lam, 1e-4).psnr_db
                print(f"    lambda={lam}: {low_noise:.2f} dB @1e-5 vs {high_noise:.2f} dB @1e-4")
                assert low_noise > high_noise
            assert time.monotonic() - start < 300.0

    def test_evaluate_determinism(self, desk_run, tmp_path):
        with criterion("Determinism (byte-identical CSV reports for identical seeds)"):
            model_path = desk_run["result"].best_checkpoint
            kwargs = dict(
                models={"cond": model_path, "zf": "zero_filled"},
                lambda_grid=[0.1, 0.9],
                sigma_grid=[0.0, 1e-4],
                dataset=desk_run["dataset"],
                split="test",
                seed=3,
            )
            a = report_to_csv(evaluate_grid(**kwargs), tmp_path / "a.csv")
            b = report_to_csv(evaluate_grid(**kwargs), tmp_path / "b.csv")
            assert a.read_bytes() == b.read_bytes()
