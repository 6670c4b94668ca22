import numpy as np
import pytest

from capscan.learn import GaussianPolicy, Mlp, PpoConfig, flatten_params, unflatten_like
from capscan.learn.policy import gaussian_logprob
from capscan.learn.ppo import ppo_loss_and_grads

from test_mlp import fd_grad

OBS, ACT, HID = 5, 2, 8


def small_nets(seed=0):
    rng = np.random.default_rng(seed)
    policy = GaussianPolicy(OBS, ACT, HID, 2, rng)
    value = Mlp([OBS, HID, HID, 1], rng)
    return policy, value


def make_batch(policy, seed=1, n=8, perturb=0.05):
    """Batch whose old log-probs come from a slightly different policy,
    so ratios sit away from 1 and the clip/min kinks."""
    rng = np.random.default_rng(seed)
    obs = rng.normal(size=(n, OBS))
    mean = policy.mean(obs)
    std = np.exp(policy.log_std())
    actions = mean + std * rng.standard_normal((n, ACT))
    old_mean = mean + perturb * rng.standard_normal((n, ACT))
    old_logp = gaussian_logprob(old_mean, policy.log_std(), actions)
    adv = rng.normal(size=n)
    adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    returns = rng.normal(size=n)
    return {"obs": obs, "actions": actions, "old_logp": old_logp,
            "advantages": adv, "returns": returns}


def test_ratio_one_policy_loss_is_minus_mean_advantage():
    policy, value = small_nets()
    batch = make_batch(policy, perturb=0.0)  # old policy == current
    batch["old_logp"] = gaussian_logprob(policy.mean(batch["obs"]),
                                         policy.log_std(), batch["actions"])
    stats, _, _ = ppo_loss_and_grads(policy, value, batch, 0.2, 0.005, 0.5)
    assert stats["ratio_mean"] == pytest.approx(1.0, abs=1e-12)
    assert stats["policy_loss"] == pytest.approx(-batch["advantages"].mean(),
                                                 abs=1e-12)
    assert abs(stats["policy_loss"]) < 1e-12  # normalized advantages


def test_clipped_sample_contributes_no_gradient():
    policy, value = small_nets()
    n = 4
    rng = np.random.default_rng(3)
    obs = rng.normal(size=(n, OBS))
    mean = policy.mean(obs)
    std = np.exp(policy.log_std())
    actions = mean + std * rng.standard_normal((n, ACT))
    logp = gaussian_logprob(mean, policy.log_std(), actions)
    # force ratio = 1.5 with positive advantage: clip at 1.2 binds
    batch = {"obs": obs, "actions": actions,
             "old_logp": logp - np.log(1.5),
             "advantages": np.ones(n), "returns": np.zeros(n)}
    stats, pol_grads, _ = ppo_loss_and_grads(policy, value, batch,
                                             0.2, 0.0, 0.0)
    assert stats["ratio_mean"] == pytest.approx(1.5, abs=1e-12)
    assert stats["policy_loss"] == pytest.approx(-1.2, abs=1e-12)
    # every sample clipped -> zero gradient everywhere on the mean path
    for g in pol_grads[:-1]:
        assert np.allclose(g, 0.0)


def test_full_loss_gradient_matches_finite_differences():
    policy, value = small_nets(seed=4)
    batch = make_batch(policy, seed=5)
    clip_eps, beta, c_v = 0.2, 0.005, 0.5

    stats, pol_grads, val_grads = ppo_loss_and_grads(policy, value, batch,
                                                     clip_eps, beta, c_v)
    pol_shapes = policy.params
    val_shapes = value.params
    pol_flat0 = flatten_params(pol_shapes)
    val_flat0 = flatten_params(val_shapes)

    def loss_of_policy(flat):
        policy.set_params(unflatten_like(flat, pol_shapes))
        s, _, _ = ppo_loss_and_grads(policy, value, batch, clip_eps, beta, c_v)
        return s["loss"]

    numeric = fd_grad(loss_of_policy, pol_flat0)
    policy.set_params(unflatten_like(pol_flat0, pol_shapes))
    analytic = flatten_params(pol_grads)
    err = np.abs(analytic - numeric) / np.maximum(np.abs(numeric), 1e-6)
    assert err.max() <= 1e-4

    def loss_of_value(flat):
        value.set_params(unflatten_like(flat, val_shapes))
        s, _, _ = ppo_loss_and_grads(policy, value, batch, clip_eps, beta, c_v)
        return s["loss"]

    numeric_v = fd_grad(loss_of_value, val_flat0)
    value.set_params(unflatten_like(val_flat0, val_shapes))
    analytic_v = flatten_params(val_grads)
    err_v = np.abs(analytic_v - numeric_v) / np.maximum(np.abs(numeric_v), 1e-6)
    assert err_v.max() <= 1e-4


def test_nonfinite_loss_aborts():
    policy, value = small_nets()
    batch = make_batch(policy)
    batch["returns"] = np.full(8, np.inf)
    with pytest.raises(FloatingPointError, match="non-finite"):
        ppo_loss_and_grads(policy, value, batch, 0.2, 0.005, 0.5)


def test_config_validation():
    with pytest.raises(ValueError):
        PpoConfig(batch_size=8192, buffer_size=4096)
    with pytest.raises(ValueError):
        PpoConfig(gamma=0.0)
    with pytest.raises(ValueError):
        PpoConfig(clip_epsilon=0.0)
    cfg = PpoConfig()
    assert cfg.batch_size == 512
    assert cfg.buffer_size == 4096
    assert cfg.learning_rate == 1e-3
    assert cfg.gamma == 0.99
    assert cfg.lam == 0.95
    assert cfg.clip_epsilon == 0.2
    assert cfg.entropy_beta == 0.005
    assert cfg.num_epoch == 5
    assert cfg.time_horizon == 1024
    assert cfg.hidden_units == 128
    assert cfg.num_layers == 2
    assert cfg.max_steps == 3_000_000
    assert cfg.summary_freq == 10_000
    round_trip = PpoConfig.from_dict(cfg.to_dict())
    assert round_trip.to_dict() == cfg.to_dict()
