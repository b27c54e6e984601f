"""``hyiga`` command line: ``run``, ``verify`` and ``export-geometry``.

Exit codes: 0 success, 1 failed acceptance criteria or I/O failure, 2 invalid configuration
or input, 3 numerical failure.
"""
import argparse
import json
import logging
import sys
from typing import Dict, List, Optional, Sequence, Union

from hyiga.assembly import export_matrix_market
from hyiga.benchmarks import BenchmarkCase, make_case, run_acceptance, run_study, StudyTable
from hyiga.element import ElementOptions
from hyiga.errors import HyigaError, NumericalError
from hyiga.nurbs import available_patches, k_refine, load_patch, NurbsPatch
from hyiga.utils import configure_threads, write_artifacts

from .config import parse_value, read_config_file, RunConfig
from .postprocess import sample_field
from .vtk import export_control_net_vtk, export_vtk, render_control_net_vtk

logger = logging.getLogger(__name__)

__all__ = ["main", "build_parser", "load_run_config", "run", "verify", "export_geometry"]

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(name)s - %(message)s"

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

# flag destination -> RunConfig field
_RUN_FLAGS = {
    "problem": "problem",
    "formulation": "formulations",
    "degree": "degrees",
    "refine": "levels",
    "slenderness": "slenderness",
    "E": "E",
    "nu": "nu",
    "regime": "regime",
    "t_eval": "t_eval",
    "output": "output",
    "formats": "formats",
    "samples": "samples",
    "magnification": "magnification",
    "threads": "threads",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hyiga", description="Hybrid stress isogeometric analysis benchmarks.")
    parser.add_argument("--verbose", "-v", action="store_true", help="log debug messages")
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", help="run a convergence study and write its artifacts")
    run_parser.add_argument("--config", help="INI file with [run], [material], [element] and [output] sections")
    run_parser.add_argument("--problem", help="beam, curved_beam, cook or plate")
    run_parser.add_argument("--formulation", help="comma separated: iga, hybrid")
    run_parser.add_argument("--degree", help="comma separated degrees, e.g. 2,3")
    run_parser.add_argument("--refine", help="refinement ladder, e.g. 0..5 or 0,2,4")
    run_parser.add_argument("--slenderness", help="L/t of the beam cases: 10, 100 or 1000")
    run_parser.add_argument("--E", dest="E", help="override Young's modulus")
    run_parser.add_argument("--nu", help="override Poisson's ratio")
    run_parser.add_argument("--regime", help="plane_stress or plane_strain")
    run_parser.add_argument("--t-eval", dest="t_eval", help="per_point or centroid")
    run_parser.add_argument("--output", help="output directory")
    run_parser.add_argument("--formats", help="comma separated: csv, vtk, mm")
    run_parser.add_argument("--samples", help="VTK sample points per element direction")
    run_parser.add_argument("--magnification", help="displacement scale of the VTK warp vectors")
    run_parser.add_argument("--threads", help="concurrent ladder runs (capped by HYIGA_THREADS)")
    run_parser.add_argument("--progress", action="store_true", help="show a progress bar")

    verify_parser = commands.add_parser("verify", help="run the acceptance suite")
    verify_parser.add_argument("--criteria", help="comma separated subset of criteria")

    geometry_parser = commands.add_parser("export-geometry", help="write a benchmark geometry as JSON and VTK")
    geometry_parser.add_argument("case", help="benchmark case or bundled patch name")
    geometry_parser.add_argument("--degree", type=int, help="elevate both directions to this degree")
    geometry_parser.add_argument("--refine", type=int, default=0, help="refinement level of the case ladder")
    geometry_parser.add_argument("--slenderness", type=float, help="L/t of the beam cases")
    geometry_parser.add_argument("--output", default=".", help="output directory")
    return parser


def load_run_config(args: argparse.Namespace) -> RunConfig:
    """Config file values overridden by explicit flags (flags win)."""
    values = read_config_file(args.config) if getattr(args, "config", None) else {}
    for flag, name in _RUN_FLAGS.items():
        raw = getattr(args, flag, None)
        if raw is not None:
            values[name] = parse_value(name, raw)
    return RunConfig().override(values)


def case_for(config: RunConfig) -> BenchmarkCase:
    case = make_case(config.problem, slenderness=config.slenderness, nu=config.nu)
    if config.E is not None or config.regime is not None:
        case = case.with_material(E=config.E, regime=config.regime)
    for degree in config.degrees:
        case.check_degree(degree)
    return case


def _run_name(case: BenchmarkCase, formulation: str, degree: int, level: int) -> str:
    return "{}_{}_d{}_r{}".format(case.name, formulation, degree, level)


def _summary(config: RunConfig, case: BenchmarkCase, table: StudyTable) -> str:
    material = case.material
    summary = {
        "config": config.to_json(),
        "case": {
            "name": case.name,
            "parameters": dict(case.parameters),
            "material": {
                "E": material.E,
                "nu": material.nu,
                "regime": None if material.regime is None else material.regime.value,
            },
            "reference_tip": case.reference_tip,
        },
        "results": table.summary(),
    }
    return json.dumps(summary, indent=2, sort_keys=True) + "\n"


def run(config: RunConfig, progress: bool = False) -> Dict[str, Union[str, bytes]]:
    """Runs the study of ``config`` and writes its artifacts; returns them by file name.

    Nothing is written unless every run of the study succeeded.
    """
    configure_threads(config.threads)
    case = case_for(config)
    options = ElementOptions(t_eval=config.t_eval)
    table = run_study(
        case,
        config.formulations,
        config.degrees,
        ladder=config.levels,
        options=options,
        threads=config.threads,
        progress=progress,
        keep_solutions="vtk" in config.formats,
    )
    artifacts: Dict[str, Union[str, bytes]] = {}
    if "csv" in config.formats:
        artifacts["study.csv"] = table.to_csv()
    artifacts["summary.json"] = _summary(config, case, table)
    for row in table.rows:
        name = _run_name(case, row.formulation, row.degree, row.refinement)
        if "vtk" in config.formats:
            solution = table.solutions[(row.formulation, row.degree, row.refinement)]
            export = sample_field(solution, config.samples, config.magnification, title=name)
            artifacts[name + ".vtk"] = export_vtk(export)
            artifacts[name + "_net.vtk"] = export_control_net_vtk(export)
        if "mm" in config.formats:
            reduced = case.reduced_system(row.formulation, row.degree, row.refinement, options)
            artifacts[name + ".mtx"] = export_matrix_market(reduced)
    write_artifacts(config.output, artifacts)
    return artifacts


def verify(criteria: Optional[Sequence[str]] = None) -> int:
    results = run_acceptance(criteria)
    for result in results:
        print(result)
    passed = sum(result.passed for result in results)
    print("{}/{} criteria passed".format(passed, len(results)))
    return EXIT_OK if passed == len(results) else EXIT_FAILURE


def _geometry(name: str, degree: Optional[int], level: int, slenderness: Optional[float]) -> NurbsPatch:
    if name in available_patches():
        patch = load_patch(name)
        return patch if degree is None else k_refine(patch, degree)
    case = make_case(name, slenderness=slenderness)
    if degree is None:
        degree = max(case.base_patch.degree_u, case.base_patch.degree_v, min(case.degrees))
    return case.patch(degree, level)


def export_geometry(
    name: str, output: str = ".", degree: Optional[int] = None, level: int = 0, slenderness: Optional[float] = None
) -> Dict[str, str]:
    """Writes ``<name>.json`` (patch) and ``<name>_net.vtk`` (control net) into ``output``."""
    patch = _geometry(name, degree, level, slenderness)
    artifacts = {
        name + ".json": patch.dumps(),
        name + "_net.vtk": render_control_net_vtk(patch.control_points, patch.shape, title=name + " control net"),
    }
    write_artifacts(output, artifacts)
    return artifacts


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(format=LOG_FORMAT, level=logging.DEBUG if args.verbose else logging.INFO)
    try:
        if args.command == "run":
            run(load_run_config(args), progress=args.progress)
        elif args.command == "verify":
            criteria = None if args.criteria is None else [c.strip() for c in args.criteria.split(",") if c.strip()]
            return verify(criteria)
        else:
            export_geometry(args.case, args.output, args.degree, args.refine, args.slenderness)
    except NumericalError as err:
        logger.error("Numerical failure: {}".format(err))
        return EXIT_NUMERICAL
    except HyigaError as err:
        logger.error("Invalid input: {}".format(err))
        return EXIT_CONFIG
    except OSError as err:
        logger.error(str(err))
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
