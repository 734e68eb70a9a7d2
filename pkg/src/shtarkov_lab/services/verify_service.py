"""Cross-module verification suite.

Every check recomputes one identity or inequality with independent code paths
on a seeded desk-scale suite and reports pass, fail or skipped (budget).
"""

import itertools
import logging
import math
import sys
from collections.abc import Callable, Iterator
from dataclasses import dataclass

import numpy as np
from tqdm import tqdm

from shtarkov_lab.config.schema import RunConfig
from shtarkov_lab.core.experts import (
    ConstantExpert,
    LinearExpert,
    NonSequentialExpert,
    PointMassExpert,
    random_table_expert,
)
from shtarkov_lab.core.hypothesis import (
    ExplicitFiniteClass,
    bernoulli_full_class,
    random_explicit_class,
)
from shtarkov_lab.core.likelihood import verify_normalization
from shtarkov_lab.models.alphabets import ContextAlphabet, Distribution, LabelAlphabet, Prefix
from shtarkov_lab.models.report_types import CheckResult, VerifyReport
from shtarkov_lab.models.trees import ContextTree, enumerate_trees
from shtarkov_lab.services.cnml_service import (
    BayesMixtureForecaster,
    CNMLForecaster,
    TruncatedForecaster,
    UniformForecaster,
    exhaustive_worst_regret,
    nml_distribution,
)
from shtarkov_lab.services.covers_service import (
    CHAINING_CONSTANT,
    entropy_regret_bounds,
    fat_shattering_dim,
    global_entropy,
    induce_tree_cover,
    is_sequential_cover,
    min_sequential_cover,
    sequential_entropy,
    smoothed_cover_ratios,
)
from shtarkov_lab.services.game_service import (
    dual_game_value,
    fixed_design_regret,
    minimax_regret_exact,
    minimax_regret_grid,
    pinned_design_regret,
)
from shtarkov_lab.services.linlab_service import lemma_chain_holds, lin_lower_bound_experiment
from shtarkov_lab.services.shtarkov_service import (
    general_shtarkov,
    induce_subprob,
    shtarkov_contextfree,
    shtarkov_contextual,
    shtarkov_mc_estimate,
    shtarkov_prefix,
    worst_case_shtarkov,
    worst_case_shtarkov_bruteforce,
)
from shtarkov_lab.services.truncation_service import (
    m_of_t,
    truncated_regret_gap_check,
    truncation_likelihood_gap,
    truncation_loss_gap,
)
from shtarkov_lab.shared.constants import DEFAULT_DELTA_GRID
from shtarkov_lab.shared.exceptions import EnumerationBudgetExceeded
from shtarkov_lab.shared.utils.enumeration import sequences, tree_node_count
from shtarkov_lab.shared.utils.logspace import NEG_INF

logger = logging.getLogger(__name__)

# (contexts, labels, horizon) shapes of the seeded explicit-class suite
SUITE_SHAPES = ((1, 2, 2), (2, 2, 2), (2, 2, 3), (1, 3, 2), (2, 3, 2), (1, 2, 3), (2, 3, 3))
SUITE_SIZE = 210
EXPERTS_PER_CLASS = 3
BRUTEFORCE_TREE_LIMIT = 1024
MC_RUNS = 200
MC_SAMPLES = 10**5
LOSS_GAP_TRIPLES = 10**4
LIN_HORIZONS = (1, 2, 4, 8, 16)


@dataclass
class SuiteContext:
    config: RunConfig
    suite_size: int = SUITE_SIZE

    @property
    def tol(self) -> float:
        return self.config.tolerances.equality

    @property
    def budget(self) -> int:
        return self.config.effective_budgets.sequences

    def instances(
        self, strictly_positive: bool = True
    ) -> Iterator[tuple[ExplicitFiniteClass, int]]:
        """Seeded explicit classes cycling through the suite shapes."""
        base = self.config.seed
        for i in range(self.suite_size):
            X, K, T = SUITE_SHAPES[i % len(SUITE_SHAPES)]
            F = random_explicit_class(
                (base + i) % 2**32, EXPERTS_PER_CLASS, K, X, T, strictly_positive
            )
            yield F, T


Outcome = tuple[bool, str]


def _binary_class(values: list[tuple[float, ...]]) -> ExplicitFiniteClass:
    experts = [NonSequentialExpert.binary(v, name=f"f{i}") for i, v in enumerate(values)]
    return ExplicitFiniteClass(experts, LabelAlphabet(2), ContextAlphabet(len(values[0])))


def _constant_class(probs: list[float]) -> ExplicitFiniteClass:
    return ExplicitFiniteClass(
        [ConstantExpert.bernoulli(p) for p in probs], LabelAlphabet(2), ContextAlphabet(1)
    )


def _worst(values: list[float]) -> str:
    return f"max deviation {max(values, default=0.0):.3g}"


# ============================================================================
# Game values
# ============================================================================


def check_minimax_characterization(ctx: SuiteContext) -> Outcome:
    gaps = []
    for F, T in ctx.instances():
        primal = minimax_regret_exact(F, T, budget=ctx.budget)
        worst = worst_case_shtarkov(F, T, budget=ctx.budget)
        gaps.append(abs(primal - worst))
        trees = F.num_contexts ** tree_node_count(F.num_labels, T)
        if trees <= BRUTEFORCE_TREE_LIMIT:
            brute, _ = worst_case_shtarkov_bruteforce(
                F, T, budget=ctx.config.effective_budgets.trees
            )
            gaps.append(abs(brute - worst))
    return max(gaps) <= ctx.tol, _worst(gaps)


def check_dual_game(ctx: SuiteContext) -> Outcome:
    gaps = []
    for F, T in ctx.instances():
        primal = minimax_regret_exact(F, T, budget=ctx.budget)
        gaps.append(abs(dual_game_value(F, T, budget=ctx.budget).value - primal))
    return max(gaps) <= ctx.tol, _worst(gaps)


def check_dual_lower_bound(ctx: SuiteContext) -> Outcome:
    """Weak duality and the minimax identity for classes with zero predictions."""
    excess = []
    for F, T in ctx.instances(strictly_positive=False):
        primal = minimax_regret_exact(F, T, budget=ctx.budget)
        dual = dual_game_value(F, T, budget=ctx.budget).value
        worst = worst_case_shtarkov(F, T, budget=ctx.budget)
        excess.append(max(dual - primal, abs(primal - worst)))
    return max(excess) <= ctx.tol, _worst(excess)


def check_contextfree_nml(ctx: SuiteContext) -> Outcome:
    gaps = []
    for F, T in ctx.instances():
        if F.num_contexts != 1:
            continue
        primal = minimax_regret_exact(F, T, budget=ctx.budget)
        gaps.append(abs(shtarkov_contextfree(F, T, ctx.budget) - primal))
    return max(gaps) <= ctx.tol, _worst(gaps)


def check_fixed_design(ctx: SuiteContext) -> Outcome:
    """Fixed-design value matches the game solved with pinned contexts.

    It also never exceeds the adaptive value.
    """
    excess = []
    for F, T in ctx.instances():
        value, _ = fixed_design_regret(F, T, budget=ctx.budget)
        by_induction = max(
            pinned_design_regret(F, xs, budget=ctx.budget)
            for xs in sequences(F.num_contexts, T)
        )
        excess.append(abs(value - by_induction))
        excess.append(max(0.0, value - worst_case_shtarkov(F, T, budget=ctx.budget)))
    return max(excess) <= ctx.tol, _worst(excess)


def check_grid_oracle(ctx: SuiteContext) -> Outcome:
    F = bernoulli_full_class()
    simplex = ctx.config.effective_budgets.simplex
    t1 = minimax_regret_grid(F, 1, 1e-3, budget=ctx.budget, simplex_budget=simplex)
    t2 = minimax_regret_exact(F, 2, budget=ctx.budget)
    exact = minimax_regret_exact(F, 1, budget=ctx.budget)
    ladder = [
        minimax_regret_grid(F, 2, h, budget=ctx.budget, simplex_budget=simplex)
        for h in (1e-1, 5e-2, 1e-2, 1e-3)
    ]
    sandwich = all(v >= t2 - ctx.tol for v in ladder)
    monotone = all(b <= a + ctx.tol for a, b in zip(ladder, ladder[1:]))
    ok = (
        abs(t1 - math.log(2)) <= 5e-4
        and t1 >= exact - ctx.tol
        and abs(t2 - math.log(2.5)) <= ctx.tol
        and sandwich
        and monotone
    )
    return ok, f"T=1 grid {t1:.7f}, T=2 exact {t2:.9f}, ladder {[round(v, 6) for v in ladder]}"


# ============================================================================
# cNML
# ============================================================================


def check_cnml_optimality(ctx: SuiteContext) -> Outcome:
    gaps = []
    for F, T in ctx.instances():
        primal = minimax_regret_exact(F, T, budget=ctx.budget)
        forecaster = CNMLForecaster(F, T, budget=ctx.budget)
        cnml = exhaustive_worst_regret(forecaster, F, T, budget=ctx.budget).value
        gaps.append(abs(cnml - primal))
        for alt in (UniformForecaster(F.num_labels), BayesMixtureForecaster(F),
                    TruncatedForecaster(CNMLForecaster(F, T, budget=ctx.budget), 0.05)):
            worst = exhaustive_worst_regret(alt, F, T, budget=ctx.budget).value
            gaps.append(max(0.0, cnml - worst))
    return max(gaps) <= ctx.tol, _worst(gaps)


def check_finite_class_bound(ctx: SuiteContext) -> Outcome:
    excess = []
    for F, T in ctx.instances():
        forecaster = CNMLForecaster(F, T, budget=ctx.budget)
        value = exhaustive_worst_regret(forecaster, F, T, budget=ctx.budget).value
        excess.append(max(0.0, value - math.log(len(F))))
    pointmass = ExplicitFiniteClass(
        [PointMassExpert(2, s) for s in ((0, 1), (1, 1), (1, 0))],
        LabelAlphabet(2),
        ContextAlphabet(1),
    )
    value = exhaustive_worst_regret(CNMLForecaster(pointmass, 2), pointmass, 2).value
    excess.append(abs(value - math.log(3)))
    return max(excess) <= ctx.tol, _worst(excess)


def check_cnml_reduces_to_nml(ctx: SuiteContext) -> Outcome:
    gaps = []
    for F, T in ctx.instances():
        if F.num_contexts != 1:
            continue
        nml = nml_distribution(F, T, ctx.budget)
        forecaster = CNMLForecaster(F, T, budget=ctx.budget)
        for path, mass in nml.items():
            if F.sup_log_likelihood((0,) * T, path)[0] == NEG_INF:
                continue
            product = 1.0
            for t, y in enumerate(path):
                product *= forecaster.forecast((0,) * (t + 1), path[:t])[y]
            gaps.append(abs(product - mass))
    return max(gaps) <= ctx.config.tolerances.normalization, _worst(gaps)


# ============================================================================
# Likelihoods and Shtarkov sums
# ============================================================================


def _normalization_experts(rng: np.random.Generator, K: int, X: int, T: int) -> list:
    experts = [
        random_table_expert(rng, K, X, T, strictly_positive=False),
        NonSequentialExpert(K, tuple(Distribution.of(rng.dirichlet(np.ones(K))) for _ in range(X))),
        ConstantExpert(Distribution.uniform(K)),
        PointMassExpert(K, tuple(int(v) for v in rng.integers(0, K, size=T))),
    ]
    if K == 2:
        design = tuple(tuple(row) for row in np.eye(X))
        w = rng.normal(size=X)
        experts.append(LinearExpert(tuple(w / np.linalg.norm(w) / 2), design))
        experts.append(LinearExpert(tuple(w / np.linalg.norm(w)), design, absolute=True))
    return experts


def check_normalization(ctx: SuiteContext) -> Outcome:
    rng = np.random.default_rng(ctx.config.seed)
    deviations = []
    for X, K, T in itertools.product((1, 2, 3), (2, 3), (1, 2, 3, 4)):
        nodes = tree_node_count(K, T)
        if X**nodes <= 256:
            trees = list(enumerate_trees(T, K, X))
        else:
            trees = [
                ContextTree(T, K, tuple(int(v) for v in rng.integers(0, X, size=nodes)))
                for _ in range(16)
            ]
        for expert in _normalization_experts(rng, K, X, T):
            for tree in trees:
                deviations.append(abs(verify_normalization(expert, tree)))
    return max(deviations) <= ctx.config.tolerances.normalization, _worst(deviations)


def check_monte_carlo(ctx: SuiteContext) -> Outcome:
    F = bernoulli_full_class()
    tree = ContextTree.constant([0, 0], 2)
    exact = math.exp(shtarkov_contextual(F, tree, ctx.budget))
    estimates, variances = [], []
    for run in range(MC_RUNS):
        estimate, stderr = shtarkov_mc_estimate(F, tree, MC_SAMPLES, ctx.config.seed + run)
        estimates.append(estimate)
        variances.append(stderr**2)
    mean = math.fsum(estimates) / MC_RUNS
    combined = math.sqrt(math.fsum(variances)) / MC_RUNS
    return abs(mean - exact) <= 4 * combined, f"mean {mean:.6f} vs {exact:.6f} (se {combined:.2g})"


def check_subprobability(ctx: SuiteContext) -> Outcome:
    rng = np.random.default_rng(ctx.config.seed)
    gaps = []
    for F, T in ctx.instances():
        nodes = tree_node_count(F.num_labels, T)
        draws = rng.integers(0, F.num_contexts, size=nodes)
        tree = ContextTree(T, F.num_labels, tuple(int(v) for v in draws))
        induced = general_shtarkov(induce_subprob(F, tree))
        gaps.append(abs(induced - shtarkov_contextual(F, tree, ctx.budget)))
        prefix = Prefix((0,), (int(rng.integers(F.num_labels)),))
        rest = ContextTree.constant([F.num_contexts - 1] * (T - 1), F.num_labels)
        induced = general_shtarkov(induce_subprob(F, rest, prefix))
        gaps.append(abs(induced - shtarkov_prefix(F, rest, prefix, T, ctx.budget)))
    return max(gaps) <= ctx.config.tolerances.normalization, _worst(gaps)


# ============================================================================
# Covers
# ============================================================================


def _cover_suite(ctx: SuiteContext) -> Iterator[ExplicitFiniteClass]:
    rng = np.random.default_rng(ctx.config.seed)
    for _ in range(6):
        yield _binary_class([tuple(float(v) for v in rng.random(2).round(2)) for _ in range(3)])
    yield _constant_class([0.2, 0.8])
    yield _constant_class([0.0, 1.0])


def check_cover_bounds(ctx: SuiteContext) -> Outcome:
    alphas = (0.05, 0.1, 0.2)
    shortfall = []
    for F in _cover_suite(ctx):
        exact = minimax_regret_exact(F, 2, budget=ctx.budget)
        report = entropy_regret_bounds(
            F, 2, alphas, exact, ctx.config.effective_budgets.covers,
            ctx.config.effective_budgets.trees,
        )
        for row in report.rows:
            shortfall.append(max(0.0, exact - row.smoothed_cover_bound))
            shortfall.append(max(0.0, exact - row.chaining_bound))
            shortfall.append(max(0.0, exact - row.global_cover_bound))
            shortfall.append(max(0.0, row.smoothed_cover_bound - row.global_cover_bound))
    c_ok = abs(CHAINING_CONSTANT - 3.2230) <= 1e-4
    return max(shortfall) <= ctx.tol and c_ok, f"{_worst(shortfall)}, c = {CHAINING_CONSTANT:.5f}"


def check_smoothed_covers(ctx: SuiteContext) -> Outcome:
    violations = []
    covers = ctx.config.effective_budgets.covers
    for F in _cover_suite(ctx):
        for tree in enumerate_trees(2, 2, F.num_contexts):
            for alpha in (0.05, 0.1, 0.2):
                _, certificate = min_sequential_cover(F, tree, alpha, covers)
                upper, lower = smoothed_cover_ratios(certificate, F, tree)
                violations.append(max(0.0, upper - (1 + 2 * alpha), lower - (1 + 2 * alpha)))
    return max(violations) <= ctx.tol, _worst(violations)


def check_global_covers(ctx: SuiteContext) -> Outcome:
    ok, worst = True, 0.0
    covers = ctx.config.effective_budgets.covers
    for F in _cover_suite(ctx):
        for alpha in (0.1, 0.2):
            h_seq = sequential_entropy(F, alpha, 2, covers, ctx.config.effective_budgets.trees)
            h_global, G = global_entropy(F, alpha, 2, covers)
            worst = max(worst, h_seq - h_global)
            for tree in enumerate_trees(2, 2, F.num_contexts):
                valid, _ = is_sequential_cover(induce_tree_cover(G, tree), F, tree, alpha)
                ok = ok and valid
    return ok and worst <= ctx.tol, f"max H_seq - H_global {worst:.3g}"


def check_fat_shattering(ctx: SuiteContext) -> Outcome:
    ok = True
    covers = ctx.config.effective_budgets.covers
    trees = ctx.config.effective_budgets.trees
    for F in _cover_suite(ctx):
        report = entropy_regret_bounds(F, 2, (0.05, 0.1, 0.2), None, covers, trees)
        ok = ok and all(row.fat_check for row in report.rows)
    two = _constant_class([0.0, 1.0])
    size, _ = min_sequential_cover(two, ContextTree.constant([0, 0], 2), 0.3, covers)
    anchors = fat_shattering_dim(two, 0.5, 3, covers) == 1 and size == 2
    return ok and anchors, f"anchors {'hold' if anchors else 'fail'}"


# ============================================================================
# Linear class and truncation
# ============================================================================


def check_lin_lower_bound(ctx: SuiteContext) -> Outcome:
    gaps = []
    for T in LIN_HORIZONS:
        report = lin_lower_bound_experiment(T, T, ctx.budget)
        gaps.append(abs(report.conditional_shtarkov_log - report.lower_bound_log))
    chain = all(lemma_chain_holds(T) for T in range(1, 65))
    return max(gaps) <= ctx.tol and chain, f"{_worst(gaps)}, chain {'holds' if chain else 'fails'}"


def check_truncation_loss_gap(ctx: SuiteContext) -> Outcome:
    rng = np.random.default_rng(ctx.config.seed)
    excess = []
    for K in (2, 3, 4):
        for _ in range(LOSS_GAP_TRIPLES):
            p = Distribution.of(rng.dirichlet(np.ones(K)))
            y = int(rng.integers(K))
            delta = float(rng.uniform(1e-4, 0.5 - 1e-4))
            gap = truncation_loss_gap(p, y, delta)
            excess.append(max(0.0, gap - math.log1p(K * delta)))
    return max(excess) <= ctx.tol, _worst(excess)


def check_truncation_likelihood_gap(ctx: SuiteContext) -> Outcome:
    excess = []
    for F, T in itertools.islice(ctx.instances(), 3 * len(SUITE_SHAPES)):
        for delta in DEFAULT_DELTA_GRID:
            bound = delta * m_of_t(T)
            for f in F.experts:
                for xs in sequences(F.num_contexts, T):
                    for ys in sequences(F.num_labels, T):
                        excess.append(max(0.0, truncation_likelihood_gap(f, xs, ys, delta) - bound))
    return max(excess) <= ctx.tol, _worst(excess)


def check_truncated_regret(ctx: SuiteContext) -> Outcome:
    ok = True
    instances = [_constant_class([0.0, 1.0]), _constant_class([0.2, 0.8])]
    instances += [F for F, _ in itertools.islice(ctx.instances(strictly_positive=False), 7)]
    for F in instances:
        report = truncated_regret_gap_check(F, 2, DEFAULT_DELTA_GRID, ctx.budget)
        ok = ok and all(r.regret_inequality and r.shtarkov_inequality for r in report.rows)
    monotone = truncated_regret_gap_check(instances[0], 2, (0.1, 0.01, 0.001), ctx.budget)
    ok = ok and monotone.monotone_convergence
    return ok, "inequalities and monotone convergence" + ("" if ok else " violated")


@dataclass(frozen=True)
class Check:
    name: str
    result: str
    run: Callable[[SuiteContext], Outcome]


CHECKS: tuple[Check, ...] = (
    Check(
        "minimax_regret_equals_worst_case_shtarkov",
        "minimax characterisation",
        check_minimax_characterization,
    ),
    Check("dual_game_equals_primal", "minimax swap with entropy form", check_dual_game),
    Check(
        "dual_lower_bound_without_regularity",
        "weak duality, arbitrary classes",
        check_dual_lower_bound,
    ),
    Check(
        "contextfree_value_is_shtarkov_sum",
        "NML optimality without contexts",
        check_contextfree_nml,
    ),
    Check("fixed_design_value", "fixed-design minimax regret", check_fixed_design),
    Check("grid_oracle_sandwich", "simplex-grid learner", check_grid_oracle),
    Check("cnml_attains_minimax_regret", "cNML optimality", check_cnml_optimality),
    Check("finite_class_log_cardinality", "finite-class bound", check_finite_class_bound),
    Check("cnml_reduces_to_nml", "cNML without contexts", check_cnml_reduces_to_nml),
    Check("likelihood_normalization", "likelihood normalisation", check_normalization),
    Check("monte_carlo_unbiased", "uniform-sampling identity", check_monte_carlo),
    Check("subprobability_shtarkov_identity", "general Shtarkov sums", check_subprobability),
    Check("cover_bounds_dominate_regret", "entropy upper bounds", check_cover_bounds),
    Check("smoothed_cover_ratios", "smoothed covers", check_smoothed_covers),
    Check("global_cover_induces_tree_cover", "global vs sequential covers", check_global_covers),
    Check("fat_shattering_lower_bound", "fat-shattering vs entropy", check_fat_shattering),
    Check("orthonormal_lin_lower_bound", "Lin lower bound", check_lin_lower_bound),
    Check("truncation_loss_gap", "truncated loss gap", check_truncation_loss_gap),
    Check("truncation_likelihood_gap", "truncated likelihood gap", check_truncation_likelihood_gap),
    Check("truncated_regret_inequality", "truncated-class regret", check_truncated_regret),
)


def verify_suite(
    config: RunConfig, only: list[str] | None = None, suite_size: int = SUITE_SIZE
) -> VerifyReport:
    """Run every check (or the named ones) in a fixed order."""
    ctx = SuiteContext(config, suite_size)
    selected = [c for c in CHECKS if only is None or c.name in only]
    report = VerifyReport()
    for check in tqdm(selected, desc="verify", file=sys.stderr, disable=None):
        try:
            ok, detail = check.run(ctx)
            status = "pass" if ok else "fail"
        except EnumerationBudgetExceeded as e:
            logger.warning(f"{check.name} skipped: {e}")
            status, detail = "skipped", str(e)
        if status == "fail":
            logger.error(f"{check.name} failed: {detail}")
        report.checks.append(
            CheckResult(name=check.name, result=check.result, status=status, detail=detail)
        )
    report.passed = sum(c.status == "pass" for c in report.checks)
    report.failed = sum(c.status == "fail" for c in report.checks)
    report.skipped = sum(c.status == "skipped" for c in report.checks)
    return report
