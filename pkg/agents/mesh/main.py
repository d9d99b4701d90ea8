import logging
from functools import partial
from pathlib import Path
from typing import Dict, Any, List, Optional

from agents.core.agent_base import BaseAgent, map_cases
from agents.utils.case_store import load_cases
from dataio.cases import CaseRecord
from mesh import MeshConfig, clip_half, voxels_to_mesh, write_stl

logger = logging.getLogger(__name__)


def _mesh_one(case: CaseRecord, output_dir: str, config: MeshConfig, ascii: bool,
              clip_axis: Optional[int], clip_position_mm: Optional[float]) -> List[str]:
    out = Path(output_dir)
    written = [str(write_stl(voxels_to_mesh(case.defect, config), out / f"{case.case_id}.stl", ascii=ascii))]
    if clip_axis is not None:
        skull = case.defective.with_data(case.defective.data | case.defect.data)
        lower, upper = clip_half(voxels_to_mesh(skull, config), clip_axis, clip_position_mm)
        written.append(str(write_stl(lower, out / f"{case.case_id}_skull_lower.stl", ascii=ascii)))
        written.append(str(write_stl(upper, out / f"{case.case_id}_skull_upper.stl", ascii=ascii)))
    return written


class MeshAgent(BaseAgent):
    """STL models of the defects (and optionally the halved reconstructed skulls)."""

    def __init__(self, agent_id, run_context, config):
        if 'input_validation' not in config:
            config['input_validation'] = {
                'required_fields': ['input_dir', 'output_dir'],
                'field_types': {'input_dir': 'path', 'output_dir': 'path'},
                'existing_paths': ['input_dir'],
            }
        super().__init__(agent_id, run_context, config)

    def run(self, inputs: Dict[str, Any]) -> Dict[str, Any]:
        settings = self.pipeline_config.mesh
        output_dir = Path(inputs['output_dir'])
        self.check_cancelled()
        output_dir.mkdir(parents=True, exist_ok=True)
        work = partial(_mesh_one, output_dir=str(output_dir), config=settings.to_mesh_config(),
                       ascii=settings.ascii, clip_axis=settings.clip_axis,
                       clip_position_mm=settings.clip_position_mm)
        files = [path for written in map_cases(work, load_cases(inputs['input_dir']), self.pipeline_config.jobs,
                                                     cancelled=self.cancelled)
                 for path in written]
        return {'stl_dir': str(output_dir), 'stl_files': files, 'artifacts': files}
