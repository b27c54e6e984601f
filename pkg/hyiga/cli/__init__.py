from .config import OUTPUT_FORMATS, read_config_file, RunConfig
from .postprocess import FieldExport, recover_stress, sample_field, StressSampler
from .vtk import export_control_net_vtk, export_vtk, render_control_net_vtk, render_vtk

__all__ = [
    "RunConfig",
    "OUTPUT_FORMATS",
    "read_config_file",
    "StressSampler",
    "recover_stress",
    "FieldExport",
    "sample_field",
    "render_vtk",
    "export_vtk",
    "render_control_net_vtk",
    "export_control_net_vtk",
]
