import re
import yaml
import asyncio
import importlib
import logging
from pathlib import Path
from typing import Dict, Any, List, Optional, Union
from functools import reduce

from agents.core.agent_base import AgentResult, AgentStatus
from agents.core.run_context import RunContext
from volume.errors import ConfigValidationError

logger = logging.getLogger(__name__)

DEFAULT_PIPELINE = Path(__file__).resolve().parent / "pipeline.yaml"

_TEMPLATE = re.compile(r"\{([A-Za-z_][A-Za-z0-9_.]*)\}")


# --- Context Management Utilities ---
def _get_from_context(context: Dict[str, Any], path: str):
    """Access a nested dictionary value using dot notation."""
    try:
        return reduce(lambda d, key: d[key], path.split('.'), context)
    except (KeyError, TypeError):
        logger.debug(f"Could not resolve path '{path}' in context.")
        return None


def _set_in_context(context: Dict[str, Any], path: str, value: Any):
    """Set a nested dictionary value using dot notation."""
    keys = path.split('.')
    d = context
    for key in keys[:-1]:
        d = d.setdefault(key, {})
    d[keys[-1]] = value


def resolve_input(context: Dict[str, Any], mapping: Any) -> Any:
    """Value for one input mapping.

    A list is a fallback chain (first resolvable entry wins), a string with
    ``{dotted.path}`` placeholders is a template, any other string is a dotted
    context path and non-strings are literals.
    """
    if isinstance(mapping, list):
        for option in mapping:
            value = resolve_input(context, option)
            if value is not None:
                return value
        return None
    if not isinstance(mapping, str):
        return mapping
    if '{' in mapping:
        missing = []

        def substitute(match: "re.Match[str]") -> str:
            value = _get_from_context(context, match.group(1))
            if value is None:
                missing.append(match.group(1))
                return ''
            return str(value)

        rendered = _TEMPLATE.sub(substitute, mapping)
        return None if missing else rendered
    return _get_from_context(context, mapping)


# --- Dynamic Agent Loading ---
def load_agent_class(agent_name: str):
    """Dynamically import an agent class from its module."""
    try:
        module_path = f"agents.{agent_name}.main"
        class_name = "".join(word.capitalize() for word in agent_name.split('_')) + "Agent"
        module = importlib.import_module(module_path)
        return getattr(module, class_name)
    except (ImportError, AttributeError) as e:
        logger.error(f"Failed to load agent '{agent_name}': {e}")
        raise ConfigValidationError(f"unknown pipeline agent '{agent_name}'") from e


class StageFailed(Exception):
    def __init__(self, agent_name: str, result: AgentResult):
        super().__init__(f"Agent {agent_name} returned {result.status.value}: {result.error_details}")
        self.agent_name = agent_name
        self.result = result


# --- Orchestrator Class ---
class Orchestrator:
    """Runs the stages of a YAML pipeline against one :class:`RunContext`.

    Stages run in file order; agents inside a stage run one after another or
    concurrently (``execution_mode: parallel``). The first failed agent aborts
    the pipeline and is kept in :attr:`failure`.
    """

    def __init__(self, run_context: RunContext, pipeline_path: Union[str, Path] = DEFAULT_PIPELINE):
        self.pipeline = self._load_yaml(pipeline_path)
        self.run_context = run_context
        self.context: Dict[str, Any] = {}
        self.results: Dict[str, AgentResult] = {}
        self.failure: Optional[StageFailed] = None

    def _load_yaml(self, path: Union[str, Path]) -> Dict[str, Any]:
        path = Path(path)
        if not path.is_file():
            raise ConfigValidationError(f"pipeline file not found: {path}")
        try:
            data = yaml.safe_load(path.read_text())
        except yaml.YAMLError as e:
            raise ConfigValidationError(f"{path}: invalid pipeline YAML: {e}") from e
        if not isinstance(data, dict) or not isinstance(data.get('stages'), list):
            raise ConfigValidationError(f"{path}: pipeline needs a 'stages' list")
        return data

    def initial_context(self, inputs: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        config = self.run_context.config
        recipe = config.recipe
        inputs = {k: str(v) if isinstance(v, Path) else v for k, v in (inputs or {}).items()}
        return {
            'run': {'output_dir': str(self.run_context.output_dir), 'seed': config.seed,
                    'ablation': config.ablation},
            'inputs': inputs,
            'toggles': {
                'refine': bool((recipe.refine or config.refine.enabled) and inputs.get('refine_checkpoint')),
                'implant': recipe.implant or config.implant.enabled,
                'ground_truth': bool(inputs.get('ground_truth')),
            },
        }

    async def run_pipeline(self, inputs: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """Execute every stage; returns the final context."""
        self.context = self.initial_context(inputs)
        logger.info(f"Starting pipeline: {self.pipeline.get('name', 'Untitled')}")
        for stage_config in self.pipeline['stages']:
            if not await self.run_stage(stage_config):
                logger.error(f"Pipeline aborted due to failure in stage: {stage_config.get('name')}")
                return self.context
        logger.info("Pipeline completed successfully.")
        return self.context

    async def run_stage(self, stage_config: Dict[str, Any]) -> bool:
        """Execute a single stage of the pipeline."""
        stage_name = stage_config.get('name', 'Unnamed Stage')
        agent_configs = [a for a in stage_config.get('agents', []) if self._enabled(a)]
        if not agent_configs:
            logger.info(f"=== Skipping Stage: {stage_name} (disabled) ===")
            return True
        logger.info(f"=== Running Stage: {stage_name} ===")
        try:
            if stage_config.get('execution_mode') == 'parallel':
                await asyncio.gather(*[self.execute_agent(agent_config) for agent_config in agent_configs])
            else:
                for agent_config in agent_configs:
                    await self.execute_agent(agent_config)
            return True
        except StageFailed as e:
            logger.error(f"Stage '{stage_name}' failed: {e}")
            self.failure = self.failure or e
            return False

    def _enabled(self, agent_config: Dict[str, Any]) -> bool:
        condition = agent_config.get('when')
        if condition is None:
            return True
        negate = condition.startswith('not ')
        value = bool(_get_from_context(self.context, condition[4:] if negate else condition))
        return value != negate

    async def execute_agent(self, agent_config: Dict[str, Any]) -> AgentResult:
        """Prepare inputs, run a single agent, and map its outputs."""
        agent_name = agent_config['name']
        logger.info(f"--- Executing Agent: {agent_name} ---")

        inputs = {target_key: resolve_input(self.context, mapping)
                  for target_key, mapping in agent_config.get('inputs', {}).items()}

        agent_class = load_agent_class(agent_name)
        agent = agent_class(agent_id=agent_name, run_context=self.run_context,
                            config=dict(agent_config.get('config', {})))
        result = await agent.execute(inputs)
        self.results[agent_name] = result

        if result.status != AgentStatus.COMPLETED:
            raise StageFailed(agent_name, result)

        for source_key, context_path in agent_config.get('outputs', {}).items():
            if result.data and source_key in result.data:
                _set_in_context(self.context, context_path, result.data[source_key])

        logger.info(f"--- Finished Agent: {agent_name} ---")
        return result

    def stage_names(self) -> List[str]:
        return [a['name'] for stage in self.pipeline['stages'] for a in stage.get('agents', [])]
