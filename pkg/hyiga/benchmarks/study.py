import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import torch
from tqdm import tqdm

from hyiga.assembly import Mesh, Solution
from hyiga.element import evaluate_elements, ElementOptions, Formulation
from hyiga.errors import InputError
from hyiga.utils import get_num_threads

from .analytical import ReferenceField
from .cases import BenchmarkCase

logger = logging.getLogger(__name__)

__all__ = ["StudyRow", "StudyTable", "relative_L2_error", "run_study", "CSV_HEADER"]

CSV_HEADER = ("problem", "formulation", "degree", "refinement", "active_dof", "normalized_tip", "l2_error")


def relative_L2_error(solution: Solution, reference: ReferenceField, mesh: Optional[Mesh] = None) -> float:
    r"""Relative displacement error :math:`\sqrt{\int |u_h - u|^2 / \int |u|^2}`.

    Integrals use the element Gauss rule of the stiffness computation.

    Raises:
        InputError: the reference field has zero norm.
    """
    mesh = mesh or solution.mesh
    rule = solution.options.rule_for(mesh.patch, mesh.quadrature)
    geometry = evaluate_elements(mesh.patch, mesh.elements, rule.points)
    weighted_det = rule.weights[None, :] * geometry.det_J
    u_elements = solution.control_displacements()[mesh.connectivity]  # [E, n_loc, 2]
    u_h = torch.einsum("egk,ekd->egd", geometry.R, u_elements)
    u_ref = reference.displacement_at(geometry.parametric.reshape(-1, 2), geometry.x.reshape(-1, 2))
    u_ref = u_ref.reshape(u_h.shape)
    denominator = float((weighted_det * (u_ref**2).sum(-1)).sum())
    if not denominator > 0:
        raise InputError("reference displacement field has zero norm")
    numerator = float((weighted_det * ((u_h - u_ref) ** 2).sum(-1)).sum())
    return math.sqrt(numerator / denominator)


@dataclass
class StudyRow:
    problem: str
    formulation: str
    degree: int
    refinement: int
    active_dof: int
    normalized_tip: Optional[float]
    l2_error: Optional[float]
    elements: Tuple[int, int] = (0, 0)
    metrics: Dict[str, float] = field(default_factory=dict)
    residual: Optional[float] = None
    residual_tolerance: Optional[float] = None

    def csv_fields(self) -> List[str]:
        def number(value: Optional[float]) -> str:
            return "" if value is None else repr(float(value))

        return [
            self.problem,
            self.formulation,
            str(self.degree),
            str(self.refinement),
            str(self.active_dof),
            number(self.normalized_tip),
            number(self.l2_error),
        ]


@dataclass
class StudyTable:
    """Rows of a convergence study in ladder order, plus the solutions when kept."""

    rows: List[StudyRow] = field(default_factory=list)
    solutions: Dict[Tuple[str, int, int], Solution] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.rows)

    def extend(self, other: "StudyTable") -> None:
        self.rows.extend(other.rows)
        self.solutions.update(other.solutions)

    def curve(self, formulation: Union[Formulation, str], degree: int) -> List[StudyRow]:
        name = Formulation.parse(formulation).value
        return [row for row in self.rows if row.formulation == name and row.degree == degree]

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in self.rows:
            writer.writerow(row.csv_fields())
        return buffer.getvalue()

    def summary(self) -> Dict[str, Any]:
        """``{problem: [row, ...]}`` with every metric, for the JSON summary."""
        result: Dict[str, Any] = {}
        for row in self.rows:
            entry = asdict(row)
            entry["elements"] = list(row.elements)
            result.setdefault(row.problem, []).append(entry)
        return result


def _run_one(
    case: BenchmarkCase,
    formulation: Formulation,
    degree: int,
    level: int,
    options: ElementOptions,
    reference: Optional[ReferenceField],
) -> Tuple[StudyRow, Solution]:
    solution = case.solve(formulation, degree, level, options)
    l2_error = None if reference is None else relative_L2_error(solution, reference)
    row = StudyRow(
        problem=case.name,
        formulation=formulation.value,
        degree=degree,
        refinement=level,
        active_dof=solution.active_dofs,
        normalized_tip=case.normalized_tip(solution),
        l2_error=l2_error,
        elements=solution.mesh.shape,
        metrics=case.tip_metrics(solution),
        residual=solution.residual,
        residual_tolerance=solution.residual_tolerance,
    )
    logger.info(
        "{} {} d{} level {}: {} active dofs, tip {}, L2 {}".format(
            case.name, formulation.value, degree, level, row.active_dof, row.normalized_tip, row.l2_error
        )
    )
    return row, solution


def run_study(
    case: BenchmarkCase,
    formulations: Iterable[Union[Formulation, str]],
    degrees: Iterable[int],
    ladder: Optional[Sequence[int]] = None,
    options: Optional[ElementOptions] = None,
    threads: Optional[int] = None,
    progress: bool = False,
    keep_solutions: bool = False,
) -> StudyTable:
    """Runs every (formulation, degree, level) combination of ``case``.

    Runs are independent and may execute concurrently (``threads``, capped by
    ``HYIGA_THREADS``); rows are returned in the order formulation, degree, level.

    Args:
        case: the benchmark.
        formulations: ``"iga"`` and/or ``"hybrid"``.
        degrees: analysis degrees, each supported by ``case``.
        ladder: refinement levels; ``case.levels`` by default.
        options: element switches shared by every run.
        threads: concurrent runs.
        progress: show a tqdm progress bar.
        keep_solutions: store each :class:`Solution` in the table.
    """
    formulations = [Formulation.parse(f) for f in formulations]
    degrees = list(degrees)
    for degree in degrees:
        case.check_degree(degree)
    ladder = list(case.levels if ladder is None else ladder)
    options = options or ElementOptions()
    reference = case.reference_field()

    jobs = [(f, d, level) for f in formulations for d in degrees for level in ladder]
    num_workers = min(get_num_threads(threads), max(len(jobs), 1))

    def work(job):
        return _run_one(case, job[0], job[1], job[2], options, reference)

    table = StudyTable()
    with tqdm(total=len(jobs), desc=case.name, disable=not progress) as bar:
        if num_workers == 1:
            results = []
            for job in jobs:
                results.append(work(job))
                bar.update(1)
        else:
            with ThreadPoolExecutor(max_workers=num_workers) as pool:
                results = []
                for result in pool.map(work, jobs):
                    results.append(result)
                    bar.update(1)
    for (formulation, degree, level), (row, solution) in zip(jobs, results):
        table.rows.append(row)
        if keep_solutions:
            table.solutions[(formulation.value, degree, level)] = solution
    return table
