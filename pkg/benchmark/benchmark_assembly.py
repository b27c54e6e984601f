import argparse

from benchmark.utils import Timer
from hyiga.assembly import apply_dirichlet, apply_traction, assemble, BoundaryKind, solve
from hyiga.benchmarks import make_case
from hyiga.element import compute_element_systems
from hyiga.utils import configure_threads


def benchmark_case(problem, formulations, degrees, level, num_iters=1):
    case = make_case(problem)
    for formulation in formulations:
        for degree in degrees:
            mesh = case.mesh(degree, level)
            label = "{} {} d{} ({} elements)".format(case.name, formulation, degree, mesh.num_elements)
            print(label)
            for _ in range(num_iters):
                with Timer("  element kernels"):
                    compute_element_systems(mesh.patch, mesh.elements, case.material, formulation)
                with Timer("  assembly"):
                    system = assemble(mesh, case.material, formulation)
                for bc in case.boundary_conditions:
                    if bc.kind is not BoundaryKind.FIXED:
                        apply_traction(system, bc)
                reduced = apply_dirichlet(system, case.boundary_conditions)
                with Timer("  solve ({} active dofs)".format(reduced.active_dofs)):
                    solve(reduced)


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Time element kernels, assembly and solve")
    parser.add_argument("--problem", type=str, default="cook", help="beam, curved_beam, cook or plate")
    parser.add_argument("--formulation", type=str, default="iga,hybrid", help="comma separated formulations")
    parser.add_argument("--degree", type=str, default="2,3", help="comma separated degrees")
    parser.add_argument("--level", type=int, default=4, help="refinement level")
    parser.add_argument("--num-iters", type=int, default=1, help="number of repetitions")
    parser.add_argument("--threads", type=int, default=None, help="torch threads")
    args = parser.parse_args()

    configure_threads(args.threads)
    benchmark_case(
        args.problem,
        [f.strip() for f in args.formulation.split(",")],
        [int(d) for d in args.degree.split(",")],
        args.level,
        args.num_iters,
    )
