"""
Configuration utilities for loading and saving configuration and system files
"""

import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import dotenv
import tomli
import tomli_w

from ..core.errors import ConfigError
from ..models.trajectory import IntegratorConfig

DEFAULT_SEED = 20240
DEFAULT_CONFIG_FILE = "hj_toolkit.toml"
SAMPLE_SYSTEM_FILE = "system.sample.json"

ENV_SEED = "HJ_TOOLKIT_SEED"
ENV_WORKERS = "HJ_TOOLKIT_WORKERS"
ENV_CONFIG = "HJ_TOOLKIT_CONFIG"


@dataclass
class RunSettings:
    """Settings after layering defaults, environment, config file and flags"""
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    seed: int = DEFAULT_SEED
    workers: int = 1
    config_path: Optional[str] = None


def load_env_vars() -> Dict[str, Any]:
    """Load .env into the environment and read the toolkit's variables

    Returns:
        Dict: Any of seed, workers, config found in the environment
    """
    dotenv.load_dotenv()
    found: Dict[str, Any] = {}
    for name, key in ((ENV_SEED, "seed"), (ENV_WORKERS, "workers")):
        raw = os.environ.get(name)
        if raw is None or not raw.strip():
            continue
        try:
            found[key] = int(raw.strip())
        except ValueError:
            print(f"⚠️ Ignoring {name}={raw.strip()!r} (not an integer)", file=sys.stderr)
    config = os.environ.get(ENV_CONFIG)
    if config and config.strip():
        found["config"] = config.strip()
    return found


def load_config_file(filename: str) -> Optional[Dict[str, Any]]:
    """Load a TOML configuration file

    Args:
        filename: Path to TOML config file

    Returns:
        Dict or None: Parsed config, or None if the file does not exist

    Raises:
        ConfigError: If the file is not valid TOML
    """
    try:
        with open(filename, "rb") as f:
            return tomli.load(f)
    except FileNotFoundError:
        return None
    except tomli.TOMLDecodeError as e:
        raise ConfigError(f"Config file is not valid TOML ({e})", filename) from None


def build_settings(flags: Optional[Mapping[str, Any]] = None, config_path: Optional[str] = None,
                   env: Optional[Mapping[str, Any]] = None) -> RunSettings:
    """Layer built-in defaults, environment, config file and command-line flags

    Args:
        flags: Command-line values; None entries are treated as unset
        config_path: Explicit config file (overrides HJ_TOOLKIT_CONFIG)
        env: Values from load_env_vars (read fresh when omitted)

    Raises:
        ConfigError: Unreadable config or invalid values
    """
    env = load_env_vars() if env is None else dict(env)
    flags = {k: v for k, v in (flags or {}).items() if v is not None}
    path = config_path or env.get("config")

    integrator: Dict[str, Any] = {}
    run: Dict[str, Any] = {"seed": DEFAULT_SEED, "workers": 1}
    run.update({k: env[k] for k in ("seed", "workers") if k in env})

    if path:
        data = load_config_file(path)
        if data is None:
            raise ConfigError("Config file not found", path)
        integrator.update(data.get("integrator", {}))
        run.update({k: v for k, v in data.get("run", {}).items() if k in ("seed", "workers")})

    integrator.update({k: flags[k] for k in IntegratorConfig.__dataclass_fields__ if k in flags})
    run.update({k: flags[k] for k in ("seed", "workers") if k in flags})
    try:
        settings = RunSettings(integrator=IntegratorConfig.from_dict(integrator),
                               seed=int(run["seed"]), workers=int(run["workers"]), config_path=path)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid setting: {e}", path) from None
    if settings.workers < 1:
        raise ConfigError("workers must be at least 1", path)
    return settings


def load_system_definition(path: str) -> Dict[str, Any]:
    """Read a system-definition file (.json, or .toml with the same keys)

    Raises:
        ConfigError: Missing file or malformed content
    """
    file = Path(path)
    if not file.is_file():
        raise ConfigError("System definition not found", path)
    try:
        if file.suffix.lower() == ".toml":
            with open(file, "rb") as f:
                data = tomli.load(f)
        else:
            with open(file, "r", encoding="utf-8") as f:
                data = json.load(f)
    except (json.JSONDecodeError, tomli.TOMLDecodeError) as e:
        raise ConfigError(f"Malformed system definition ({e})", path) from None
    if not isinstance(data, dict):
        raise ConfigError("System definition must be an object", path)
    return data


def create_sample_config(filename: str = DEFAULT_CONFIG_FILE, directory: Optional[str] = None) -> str:
    """Create a sample configuration file in TOML format, plus a .env.sample

    Args:
        filename: Output filename for the config
        directory: Optional directory to create the files in

    Returns:
        str: Path to the created config file
    """
    if directory:
        os.makedirs(directory, exist_ok=True)
        filename = os.path.join(directory, filename)

    config = {
        "integrator": IntegratorConfig().to_dict(),
        "run": {"seed": DEFAULT_SEED, "workers": 1},
    }
    with open(filename, "wb") as f:
        tomli_w.dump(config, f)
    print(f"✅ Created sample config file: {filename}", file=sys.stderr)

    env_file = os.path.join(directory, ".env.sample") if directory else ".env.sample"
    with open(env_file, "w") as f:
        f.write("# Copy this file to .env to override defaults\n")
        f.write(f"{ENV_SEED}={DEFAULT_SEED}\n")
        f.write(f"{ENV_WORKERS}=1\n")
        f.write(f"# {ENV_CONFIG}={DEFAULT_CONFIG_FILE}\n")
    print(f"✅ Created sample .env file: {env_file}", file=sys.stderr)
    return filename


def create_sample_system(filename: str = SAMPLE_SYSTEM_FILE, directory: Optional[str] = None) -> str:
    """Write a sample system definition (the WS oscillator with a trial section)"""
    if directory:
        os.makedirs(directory, exist_ok=True)
        filename = os.path.join(directory, filename)
    system = {
        "name": "ws-sample",
        "n": 1,
        "structure": "cosymplectic",
        "hamiltonian": "0.5*(p1^2 + k/q1^2) + 0.5*w^2*q1^2",
        "params": {"k": 1.0, "w": 1.0, "E": 2.0},
        "section": ["sqrt(2*E - q1^2 - k/q1^2)"],
        "q_singular": True,
    }
    with open(filename, "w", encoding="utf-8") as f:
        json.dump(system, f, indent=2)
        f.write("\n")
    print(f"✅ Created sample system file: {filename}", file=sys.stderr)
    return filename
