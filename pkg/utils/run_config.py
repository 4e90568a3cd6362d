"""
Run Configuration

Plain-text configuration files with one `key = value` per line and `#`
comments, plus the pydantic model that merges such a file with CLI flags.
Unknown keys are rejected.
"""

import logging
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from utils.errors import ConfigurationError, ParseError

logger = logging.getLogger(__name__)


def parse_key_value_text(text: str, source: str = "<config>") -> Dict[str, str]:
    """
    Parse `key = value` lines.

    Blank lines and everything after `#` are ignored. Keys may repeat only
    once; a second occurrence is an error.

    Raises:
        ParseError: On a line without `=`, an empty key or a duplicate key
    """
    entries: Dict[str, str] = {}
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"{source}: expected 'key = value', got '{raw.strip()}'", line_number=line_number)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ParseError(f"{source}: empty key", line_number=line_number)
        if key in entries:
            raise ParseError(f"{source}: duplicate key '{key}'", line_number=line_number)
        entries[key] = value
    return entries


def read_key_value_file(path: str) -> Dict[str, str]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigurationError(f"Cannot read config file {path}: {e}")
    return parse_key_value_text(text, path)


def parse_floats(value: str, count: Optional[int] = None, key: str = "value") -> List[float]:
    try:
        numbers = [float(token) for token in value.split()]
    except ValueError:
        raise ConfigurationError(f"'{key}' expects numbers, got '{value}'")
    if count is not None and len(numbers) != count:
        raise ConfigurationError(f"'{key}' expects {count} numbers, got {len(numbers)}")
    return numbers


class RunConfig(BaseModel):
    """Fully resolved parameters of one CLI run."""
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    command: str
    seed: Optional[int] = None
    data: Optional[str] = None
    out: Optional[str] = None
    scene: Optional[str] = None
    # loss weights
    alpha: Optional[float] = None
    beta: Optional[float] = None
    gamma: Optional[float] = None
    lam: Optional[float] = Field(default=None, alias="lambda")
    similarity: Optional[str] = None
    # training
    iterations: Optional[int] = None
    step_size: Optional[float] = None
    pose_step_size: Optional[float] = None
    snippet_length: Optional[int] = None
    bidirectional: Optional[bool] = None
    pose_mode: Optional[str] = None
    init_depth: Optional[float] = None
    # tracking
    init_mode: Optional[str] = None
    max_iterations: Optional[int] = None
    # evaluation
    pred: Optional[str] = None
    gt: Optional[str] = None
    cap: Optional[float] = None
    cap_preset: Optional[str] = None
    dof: Optional[int] = None
    threshold: Optional[float] = None
    frame_a: Optional[int] = None
    frame_b: Optional[int] = None
    resize: Optional[str] = None
    depth: Optional[str] = None
    image: Optional[str] = None
    intrinsics: Optional[str] = None

    @classmethod
    def resolve(cls, command: str, flags: Dict[str, Any], config_file: Optional[str] = None) -> "RunConfig":
        """
        Merge config-file values under explicit flags.

        Flags set to None do not override the file. Keys in the file use the
        flag names with dashes or underscores.
        """
        values: Dict[str, Any] = {}
        if config_file:
            for key, value in read_key_value_file(config_file).items():
                values[key.replace("-", "_")] = value
        for key, value in flags.items():
            if value is not None:
                values[key] = value
        try:
            return cls(command=command, **values)
        except ValidationError as e:
            raise ConfigurationError(f"Invalid run configuration: {e}")

    def resolved(self) -> Dict[str, Any]:
        """Non-empty settings, for logging."""
        return {key: value for key, value in self.model_dump(by_alias=True).items() if value is not None}
