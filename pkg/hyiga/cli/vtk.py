"""Legacy ASCII VTK writers for sampled fields and control nets."""
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Tuple, Union

import torch
from torch import Tensor

from .postprocess import FieldExport

logger = logging.getLogger(__name__)

__all__ = ["render_vtk", "export_vtk", "render_control_net_vtk", "export_control_net_vtk", "VTK_QUAD"]

VTK_QUAD = 9


def _number(value: float) -> str:
    return format(float(value), ".17g")


def _vectors(values: Tensor) -> Iterable[str]:
    # 2-D vectors are padded with a zero third component
    for row in values.tolist():
        yield " ".join(_number(v) for v in list(row) + [0.0] * (3 - len(row)))


def _unstructured_grid(title: str, points: Tensor, cells: Tensor) -> List[str]:
    lines = ["# vtk DataFile Version 3.0", title.replace("\n", " ")[:255], "ASCII", "DATASET UNSTRUCTURED_GRID"]
    lines.append("POINTS {} double".format(points.shape[0]))
    lines.extend(_vectors(points))
    lines.append("CELLS {} {}".format(cells.shape[0], 5 * cells.shape[0]))
    lines.extend("4 " + " ".join(str(int(i)) for i in cell) for cell in cells.tolist())
    lines.append("CELL_TYPES {}".format(cells.shape[0]))
    lines.extend(str(VTK_QUAD) for _ in range(cells.shape[0]))
    return lines


def _write(content: str, path: Optional[Union[str, Path]]) -> str:
    if path is not None:
        try:
            with open(path, "w", encoding="utf8", newline="\n") as fileobj:
                fileobj.write(content)
        except OSError as err:
            raise OSError("Failed to write {}: {}".format(path, err)) from err
        logger.info("Wrote {}".format(path))
    return content


def render_vtk(export: FieldExport) -> str:
    """Unstructured grid of quads with point data ``u``, ``warp`` (= magnification · u) and ``stress``.

    The magnification is recorded in the title line; all numbers use 17 significant digits.
    """
    title = "{} (magnification {})".format(export.title, _number(export.magnification))
    lines = _unstructured_grid(title, export.points, export.cells)
    lines.append("POINT_DATA {}".format(export.num_points))
    lines.append("VECTORS u double")
    lines.extend(_vectors(export.displacement))
    lines.append("VECTORS warp double")
    lines.extend(_vectors(export.displacement * export.magnification))
    lines.append("FIELD FieldData 1")
    lines.append("stress 3 {} double".format(export.num_points))
    lines.extend(" ".join(_number(v) for v in row) for row in export.stress.tolist())
    return "\n".join(lines) + "\n"


def export_vtk(export: FieldExport, path: Optional[Union[str, Path]] = None) -> str:
    """Renders ``export`` with :func:`render_vtk`, writing it to ``path`` when given.

    Raises:
        OSError: the file cannot be written; the message names the path.
    """
    return _write(render_vtk(export), path)


def render_control_net_vtk(
    control_points: Tensor, shape: Tuple[int, int], displacements: Optional[Tensor] = None, title: str = "control net"
) -> str:
    """Control net as quads; with ``displacements`` the net is drawn deformed, ``P + ũ``, with ``u`` as point data."""
    n_u, n_v = shape
    first = torch.arange(n_v - 1)[:, None] * n_u + torch.arange(n_u - 1)[None, :]
    first = first.reshape(-1)
    cells = torch.stack([first, first + 1, first + n_u + 1, first + n_u], dim=1)
    points = control_points if displacements is None else control_points + displacements
    lines = _unstructured_grid(title, points, cells)
    if displacements is not None:
        lines.append("POINT_DATA {}".format(points.shape[0]))
        lines.append("VECTORS u double")
        lines.extend(_vectors(displacements))
    return "\n".join(lines) + "\n"


def export_control_net_vtk(export: FieldExport, path: Optional[Union[str, Path]] = None) -> str:
    """Deformed control net of a sampled solution; written to ``path`` when given."""
    content = render_control_net_vtk(
        export.control_points, export.control_shape, export.control_displacements, export.title + " control net"
    )
    return _write(content, path)
