"""Directory-backed preset storage with an in-memory index.

Each preset lives in one JSON file named after the preset; mutations are
serialized with a lock and the index is rebuilt from the directory on
startup, so a restarted service sees exactly what was persisted.
"""

from __future__ import annotations

import re
import threading
from pathlib import Path
from typing import Optional

from .pcturb import PresetError, StylePreset, decode_preset, encode_preset

_NAME_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._ -]{0,63}$")


class PresetExistsError(ValueError):
    """A preset with this name is already stored."""


class PresetNotFoundError(KeyError):
    """No preset stored under this name."""


def valid_preset_name(name: str) -> bool:
    return bool(_NAME_RE.match(name))


class PresetStore:
    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._index: dict[str, StylePreset] = {}
        self._load()

    def _path(self, name: str) -> Path:
        return self.directory / f"{name}.json"

    def _load(self) -> None:
        for path in sorted(self.directory.glob("*.json")):
            try:
                preset = decode_preset(path.read_bytes())
            except PresetError:
                continue  # ignore foreign or corrupt files
            self._index[path.stem] = preset

    def names(self) -> list[str]:
        with self._lock:
            return sorted(self._index)

    def list(self) -> list[StylePreset]:
        with self._lock:
            return [self._index[name] for name in sorted(self._index)]

    def get(self, name: str) -> StylePreset:
        with self._lock:
            if name not in self._index:
                raise PresetNotFoundError(name)
            return self._index[name]

    def put(self, name: str, preset: StylePreset, overwrite: bool = False) -> None:
        if not valid_preset_name(name):
            raise ValueError(f"invalid preset name {name!r}")
        import dataclasses

        preset = dataclasses.replace(preset, name=name)
        with self._lock:
            if not overwrite and name in self._index:
                raise PresetExistsError(name)
            self._path(name).write_bytes(encode_preset(preset))
            self._index[name] = preset

    def delete(self, name: str) -> None:
        with self._lock:
            if name not in self._index:
                raise PresetNotFoundError(name)
            self._path(name).unlink(missing_ok=True)
            del self._index[name]

    def get_optional(self, name: str) -> Optional[StylePreset]:
        try:
            return self.get(name)
        except PresetNotFoundError:
            return None
