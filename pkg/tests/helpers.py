"""Shared fixtures: the two-group Pareto environment and its exact moments.

The frozen constants below were computed independently with 30-digit
arithmetic from the closed forms
    E[min(X,t)]        = s + s**g (s**(1-g) - t**(1-g)) / (g-1)
    E[X**b 1{X<=t}]    = g s**b / (g-b) * (1 - (t/s)**(b-g))
for Pareto(scale s, shape g) completion and X**b rewards.
"""

import numpy as np

from fairtime import DeadlineSet, GroupModel, Pareto, PowerOfTime, UtilitySpec

DEADLINE_GRID = (1.5, 2.0, 3.0, 4.0, 5.0, 7.0, 10.0, 15.0, 20.0)


def two_group_env():
    groups = [
        GroupModel(Pareto(1.0, 1.2), PowerOfTime(0.6), "group1"),
        GroupModel(Pareto(1.0, 1.4), PowerOfTime(0.2), "group2"),
    ]
    return groups, DeadlineSet(DEADLINE_GRID)


def uniform_utilities(alpha, k=2):
    return [UtilitySpec(alpha=alpha, weight=1.0) for _ in range(k)]


# group 1 = Pareto(1, 1.2) with X**0.6 rewards
MU1_AT_5 = 2.3761016816115224       # E[min(X, 5)]
TH1_AT_5 = 1.2385384245136486       # E[X**0.6 1{X<=5}]
T1_STAR = 7.0
R1_STAR = 0.52747695421614766
MU1_STAR = 2.6119454329975953
TH1_STAR = 1.3777410215763486

# group 2 = Pareto(1, 1.4) with X**0.2 rewards
TH2_AT_4 = 0.94562466738390027      # E[X**0.2 1{X<=4}]
T2_STAR = 4.0
R2_STAR = 0.45812328486220448
MU2_STAR = 2.0641270562537063
TH2_STAR = 0.94562466738390027

# optimal time shares and duals on the deadline grid above
PHI_ALPHA_HALF = (0.53518346820755478, 0.46481653179244522)
LAM_ALPHA_HALF = 0.9927740120885277
OPT_ALPHA_HALF = 1.9855480241770554
SEL_ALPHA_1 = (0.44142323734254153, 0.55857676265745847)
OPT_ALPHA_1 = -2.8065614145647446
PHI_ALPHA_2 = (0.48238643542273064, 0.51761356457726936)


def random_positive_instance(rng, k=None, alphas=(0.3, 0.5, 1.0, 2.0, 4.0)):
    """Synthetic per-group stats + utilities for solver cross-checks."""
    from fairtime import GroupStats

    k = k if k is not None else int(rng.integers(2, 6))
    alpha = float(rng.choice(alphas))
    stats = [
        GroupStats(
            group=i,
            label=f"g{i}",
            deadline=float(rng.uniform(1, 10)),
            rate=float(rng.uniform(0.05, 2.0)),
            mean_processing_time=float(rng.uniform(0.2, 5.0)),
            mean_reward=0.0,
        )
        for i in range(k)
    ]
    utilities = [UtilitySpec(alpha=alpha, weight=float(rng.uniform(0.2, 5.0))) for _ in range(k)]
    return alpha, utilities, stats


def alpha_fair_optimum_reference(alpha, weights, rates):
    """Test-local closed form for the optimal utility given per-group rates.

    Independent of the package's solver: direct evaluation of the KKT
    solution for  max sum w_k U(r_k phi_k)  over the simplex.
    """
    w = np.asarray(weights, dtype=float)
    r = np.asarray(rates, dtype=float)
    if alpha == 0.0:
        return float(np.max(w * r))
    if alpha == 1.0:
        phi = w / w.sum()
        return float(np.sum(w * np.log(r * phi)))
    s = np.sum(w ** (1.0 / alpha) * r ** (1.0 / alpha - 1.0))
    return float(s ** alpha / (1.0 - alpha))
