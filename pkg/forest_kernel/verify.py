"""
Verification battery.

Each family compares a computation with an independent one over a seeded
random corpus or a fixed grid, and yields OracleChecks. Families run in a
fixed order; with workers > 1 they run on a thread pool and are merged back
in that order, so the report does not depend on scheduling.
"""

import itertools
import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

from .config_manager import ConfigManager
from .count import (
    CountQuery, cayley_check, closed_form_count, count_recursion, induction_step_check,
)
from .enumeration import brute_force_count, filter_forests, peel_forests, verify_identity
from .errors import ForestKernelError, KernelDomainError
from .kernel import q_count, q_eval, q_eval_by_enumeration, q_eval_by_matrix_tree
from .limits import check_size
from .model import (
    Configuration, ExplicitKernel, KernelValue, PairValue, _KernelBase,
)
from .schemas import ConfigFile, FamilySummary, OracleCheck, RunReport

logger = logging.getLogger(__name__)

RECURSION_GRID = 30
INDUCTION_GRID = 20


@dataclass(frozen=True)
class CorpusCase:
    """One randomized configuration with its kernel and vertex weight."""
    index: int
    configuration: Configuration
    kernel: _KernelBase
    h: KernelValue
    tag: str = "case"

    @property
    def name(self) -> str:
        return f"{self.tag}{self.index}(m={self.configuration.m},n={self.configuration.n})"


def random_rational(rng: random.Random, nonzero: bool = False) -> Fraction:
    """Small rational with numerator in [-9, 9] and denominator in [1, 9]."""
    numerator = rng.randint(-9, 9)
    if nonzero and numerator == 0:
        numerator = 1
    return Fraction(numerator, rng.randint(1, 9))


def random_explicit_kernel(rng: random.Random, config: Configuration) -> ExplicitKernel:
    """Random rational value for every pair that can carry an edge."""
    values = []
    for a, b in itertools.combinations(config.ground, 2):
        if a.label in config.root_labels and b.label in config.root_labels:
            continue
        values.append(PairValue(pair=(a.label, b.label), value=random_rational(rng)))
    return ExplicitKernel(values=tuple(values))


def random_corpus(seed: int, trials: int, max_total: int) -> List[CorpusCase]:
    """trials configurations with 1 <= m, m + n <= max_total."""
    rng = random.Random(seed)
    corpus = []
    for index in range(trials):
        total = rng.randint(1, max_total)
        m = rng.randint(1, total)
        config = Configuration.anonymous(m, total - m)
        corpus.append(CorpusCase(
            index=index,
            configuration=config,
            kernel=random_explicit_kernel(rng, config),
            h=random_rational(rng, nonzero=True),
        ))
    logger.debug(f"Generated corpus of {trials} cases (seed {seed}, max total {max_total})")
    return corpus


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------

def check_identity(corpus: Sequence[CorpusCase], tolerance: float, limit: int) -> List[OracleCheck]:
    """Root-peeling identity (h = 1) for every pivot."""
    checks = []
    for case in corpus:
        for x in case.configuration.root_labels:
            name = f"{case.name} pivot={x}"
            try:
                report = verify_identity(case.configuration, x, case.kernel, tolerance=tolerance, limit=limit)
            except ForestKernelError as e:
                checks.append(OracleCheck.failure("identity", name, str(e)))
                continue
            checks.append(OracleCheck.compare("identity", name, report.lhs, report.rhs, tolerance))
    return checks


def check_solution(corpus: Sequence[CorpusCase], tolerance: float, limit: int) -> List[OracleCheck]:
    """Recursion against the forest sum and against the matrix-tree determinant."""
    checks = []
    for case in corpus:
        config, nu, h = case.configuration, case.kernel, case.h
        try:
            value = q_eval(config, h, nu)
            by_forests = q_eval_by_enumeration(config, h, nu, limit=limit)
            by_determinant = q_eval_by_matrix_tree(config, h, nu)
        except ForestKernelError as e:
            checks.append(OracleCheck.failure("solution", case.name, str(e)))
            continue
        checks.append(OracleCheck.compare("solution", f"{case.name} enumeration", by_forests, value, tolerance))
        checks.append(OracleCheck.compare("solution", f"{case.name} matrix-tree", by_determinant, value, tolerance))
    return checks


def check_boundary(corpus: Sequence[CorpusCase], tolerance: float, limit: int) -> List[OracleCheck]:
    """Q(empty|empty) = 1, Q(empty|gamma) = 0, Q = 0 on overlapping labels."""
    checks = []
    for case in corpus:
        config, nu, h = case.configuration, case.kernel, case.h
        empty = Configuration()
        checks.append(OracleCheck.compare("boundary", f"{case.name} empty", Fraction(1), q_eval(empty, h, nu)))
        if config.n:
            rootless = Configuration(vertices=config.vertices)
            checks.append(OracleCheck.compare(
                "boundary", f"{case.name} no roots", Fraction(0), q_eval(rootless, h, nu)))
        overlapping = Configuration(roots=config.roots, vertices=config.vertices + config.roots[:1])
        checks.append(OracleCheck.compare(
            "boundary", f"{case.name} overlap", Fraction(0), q_eval(overlapping, h, nu)))
    return checks


def check_pivot_scaling(corpus: Sequence[CorpusCase], tolerance: float, limit: int) -> List[OracleCheck]:
    """Same Q for every top-level pivot; Q(h) = h^(m+n) Q(1)."""
    checks = []
    for case in corpus:
        config, nu, h = case.configuration, case.kernel, case.h
        try:
            reference = q_eval(config, h, nu)
            for x in config.root_labels[1:]:
                checks.append(OracleCheck.compare(
                    "pivot", f"{case.name} pivot={x}", reference, q_eval(config, h, nu, pivot=x), tolerance))
            unit = q_eval(config, Fraction(1), nu)
        except ForestKernelError as e:
            checks.append(OracleCheck.failure("pivot", case.name, str(e)))
            continue
        checks.append(OracleCheck.compare(
            "scaling", f"{case.name} h={h}", h ** config.total * unit, reference, tolerance))
    return checks


def check_counting(max_total: int, limit: int) -> List[OracleCheck]:
    """Brute force against the closed form for m >= 1, m + n <= max_total."""
    checks = []
    for total in range(1, max_total + 1):
        for m in range(1, total + 1):
            n = total - m
            expected = closed_form_count(CountQuery(m=m, n=n))
            actual = brute_force_count(Configuration.anonymous(m, n), limit)
            checks.append(OracleCheck.compare("counting", f"N({m}|{n})", expected, actual))
    return checks


def check_peeling(max_total: int, limit: int) -> List[OracleCheck]:
    """Peeling and parent-map filter produce the same set of forests."""
    checks = []
    for total in range(1, max_total + 1):
        for m in range(1, total + 1):
            config = Configuration.anonymous(m, total - m)
            peeled = set(peel_forests(config, limit))
            filtered = set(filter_forests(config, limit))
            checks.append(OracleCheck(
                family="peeling", name=f"m={m} n={total - m}", expected=str(len(filtered)),
                actual=str(len(peeled)), mode="exact", passed=peeled == filtered,
                detail=None if peeled == filtered else "forest sets differ",
            ))
    return checks


def check_recursion() -> List[OracleCheck]:
    """Closed form, count recursion and collapsed Q recursion on the grid."""
    checks = []
    for m in range(1, RECURSION_GRID + 1):
        for n in range(RECURSION_GRID + 1):
            query = CountQuery(m=m, n=n)
            expected = closed_form_count(query)
            checks.append(OracleCheck.compare("recursion", f"N({m}|{n}) recursion", expected, count_recursion(query)))
            checks.append(OracleCheck.compare("recursion", f"N({m}|{n}) q_count", expected, q_count(m, n)))
    return checks


def check_induction() -> List[OracleCheck]:
    checks = []
    for m in range(1, INDUCTION_GRID + 1):
        for n in range(1, INDUCTION_GRID + 1):
            report = induction_step_check(m, n)
            checks.append(OracleCheck(
                family="induction", name=f"m={m} n={n}", expected=str(report.target),
                actual=str(report.m1 + report.m2), mode="exact", passed=report.holds,
                detail=None if report.holds else f"S={report.s} M1={report.m1} M2={report.m2}",
            ))
    return checks


def check_cayley(max_total: int, limit: int) -> List[OracleCheck]:
    checks = []
    for size in range(1, max_total + 1):
        report = cayley_check(size, limit)
        checks.append(OracleCheck.compare("cayley", f"N={size}", report.formula, report.count))
    return checks


def check_user_case(case: CorpusCase, tolerance: float, limit: int) -> List[OracleCheck]:
    """Identity and solution families on a configuration from a file."""
    checks = []
    config = case.configuration
    if config.overlap:
        value = q_eval(config, case.h, case.kernel)
        return [OracleCheck.compare("user", "overlap boundary", Fraction(0), value, tolerance)]
    try:
        checks.extend(c.model_copy(update={"family": "user"}) for c in check_identity([case], tolerance, limit))
        checks.extend(c.model_copy(update={"family": "user"}) for c in check_solution([case], tolerance, limit))
    except KernelDomainError as e:
        checks.append(OracleCheck.failure("user", case.name, str(e)))
    return checks


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------

def _dump_counterexamples(checks: List[OracleCheck], cases: Sequence[CorpusCase], dump_dir: Path) -> List[str]:
    written = []
    manager = ConfigManager(dump_dir / "counterexample.json")
    by_name = {case.name: case for case in cases}
    for i, check in enumerate(checks):
        case_name = check.name.split(" ")[0]
        case = by_name.get(case_name)
        if check.passed or case is None:
            continue
        target = dump_dir / f"{check.family}_{i}_{case.index}.json"
        manager.save(ConfigFile.from_configuration(case.configuration, case.kernel, case.h), target)
        written.append(str(target))
    return written


def run_battery(
    max_total: int = 6,
    seed: int = 1,
    trials: int = 50,
    tolerance: float = 1e-9,
    limit: int = 9,
    workers: int = 1,
    user_case: Optional[CorpusCase] = None,
    dump_dir: Optional[Path] = None,
) -> RunReport:
    """
    Run every family and summarize.

    Raises:
        SizeLimitError: max_total exceeds limit
    """
    check_size(max_total, limit)
    corpus = random_corpus(seed, trials, max_total)

    families: List[Tuple[str, Callable[[], List[OracleCheck]]]] = [
        ("identity", lambda: check_identity(corpus, tolerance, limit)),
        ("solution", lambda: check_solution(corpus, tolerance, limit)),
        ("boundary", lambda: check_boundary(corpus, tolerance, limit)),
        ("pivot_scaling", lambda: check_pivot_scaling(corpus, tolerance, limit)),
        ("peeling", lambda: check_peeling(max_total, limit)),
        ("counting", lambda: check_counting(max_total, limit)),
        ("recursion", check_recursion),
        ("induction", check_induction),
        ("cayley", lambda: check_cayley(max_total, limit)),
    ]
    if user_case is not None:
        families.append(("user", lambda: check_user_case(user_case, tolerance, limit)))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(lambda family: family[1](), families))
    else:
        results = [run() for _, run in families]

    report = RunReport(
        command="verify",
        inputs={"max_total": max_total, "seed": seed, "trials": trials},
    )
    cases = list(corpus) + ([user_case] if user_case is not None else [])
    for (name, _), checks in zip(families, results):
        failures = [c for c in checks if not c.passed]
        report.families.append(FamilySummary(name=name, cases=len(checks), failed=len(failures)))
        report.checks.extend(failures)
        if failures:
            logger.warning(f"Family {name}: {len(failures)} of {len(checks)} checks failed")
        else:
            logger.info(f"Family {name}: {len(checks)} checks passed")
        if failures and dump_dir is not None:
            for path in _dump_counterexamples(failures, cases, dump_dir):
                report.notes.append(f"counterexample written to {path}")
    return report


def user_case_from_file(config_file: ConfigFile) -> CorpusCase:
    return CorpusCase(
        index=0,
        tag="user",
        configuration=config_file.to_configuration(),
        kernel=config_file.kernel,
        h=config_file.h,
    )
