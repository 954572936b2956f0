"""Cramér-Rao bound verification on the Gaussian chart.

Over k independent observations the efficient estimator of the dual
coordinates, (1/k) sum_j Tr F_i(A_j)/n, attains the bound g/k exactly;
adding independent noise or weighting the observations unequally keeps the
estimator unbiased but strictly inflates its error covariance.
"""

import numpy as np

from rmig import Estimator, ModelSpec, Polynomial, SamplerConfig, inference

spec = ModelSpec(
    base=Polynomial((0.0,)),
    perturbations=(Polynomial((0.0, 1.0)), Polynomial((0.0, 0.0, 1.0))),
    theta_box=((-2.0, 2.0), (0.05, 4.0)),
    n=4,
)
theta = (0.0, 0.5)
cfg = SamplerConfig(steps=10_000, seed=8, chains=6)

print("== efficient estimator, k = 3 ==")
rep = inference.cramer_rao_check(Estimator.efficient(spec, 3), spec, theta, cfg)
print(f"error covariance {np.round(rep.error_cov, 4).tolist()}")
print(f"bound (g/k)      {np.round(rep.metric_inverse, 4).tolist()}")
print(f"psd slack {rep.psd_slack:+.4f} +- {rep.psd_slack_stderr:.4f}  "
      f"verdict: {rep.verdict}")

print("\n== noise-inflated estimator ==")
rep = inference.cramer_rao_check(Estimator.efficient(spec, 3), spec, theta,
                                 cfg, noise_std=0.2)
print(f"psd slack {rep.psd_slack:+.4f} +- {rep.psd_slack_stderr:.4f}  "
      f"verdict: {rep.verdict} (strictly above the bound)")

print("\n== unequal observation weights (0.7, 0.3) ==")
rep = inference.cramer_rao_check(Estimator.weighted(spec, (0.7, 0.3)), spec,
                                 theta, cfg)
print(f"psd slack {rep.psd_slack:+.4f} +- {rep.psd_slack_stderr:.4f}  "
      "(variance inflates by sum w^2 = 0.58 vs 1/k = 0.5)")

print("\n== error covariance scales as 1/k ==")
for k in (1, 2, 4, 8):
    rep = inference.cramer_rao_check(Estimator.efficient(spec, k), spec, theta,
                                     SamplerConfig(steps=6000, seed=100 + k,
                                                   chains=6))
    print(f"  k = {k}: k * error_cov diag = "
          f"{np.round(k * np.diag(rep.error_cov), 4).tolist()} (target g diag)")
