"""
On-disk episode datasets.

Layout: ``<root>/<domain>/<subtask>/<seed>.episode`` plus a ``<seed>.json``
metadata sidecar per episode and a ``manifest.json`` at the root listing
every episode with the SHA-256 of its container and of the recorded
demonstration alone.

A container is a zip archive of ``.npy`` members (``numpy.load`` opens it
like an ``.npz``). Member timestamps are fixed, so identical content gives
identical bytes. Flow extraction appends members; it never rewrites the
recorded demonstration.
"""

import hashlib
import json
import logging
import zipfile
from pathlib import Path

import numpy as np

from core.exceptions import ValidationFailure, VersionMismatch
from core.versions import FORMAT_VERSION, version_stamps
from envsim.episodes import Episode, SceneTrace
from envsim.tasks import TaskSpec
from envsim.world import Zone
from flowtrace.types import PointTrackSet

logger = logging.getLogger(__name__)

EPISODE_SUFFIX = ".episode"
MANIFEST_NAME = "manifest.json"
FLOW_MEMBERS = ("tracks", "visibility", "entity_of_point", "visaflow")
_EPOCH = (1980, 1, 1, 0, 0, 0)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_member(archive: zipfile.ZipFile, name: str, array: np.ndarray) -> None:
    info = zipfile.ZipInfo(f"{name}.npy", date_time=_EPOCH)
    info.compress_type = zipfile.ZIP_DEFLATED
    info.external_attr = 0o644 << 16
    with archive.open(info, "w") as member:
        np.lib.format.write_array(member, np.ascontiguousarray(array), allow_pickle=False)


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


class EpisodeStore:
    """Read and write one dataset root."""

    def __init__(self, root):
        self.root = Path(root)

    def episode_path(self, domain: str, subtask: str, seed: int) -> Path:
        return self.root / domain / subtask / f"{seed}{EPISODE_SUFFIX}"

    @staticmethod
    def sidecar_path(path: Path) -> Path:
        return Path(path).with_suffix(".json")

    def episode_paths(self, domain: str | None = None) -> list[Path]:
        pattern = f"{domain or '*'}/*/*{EPISODE_SUFFIX}"
        return sorted(self.root.glob(pattern), key=lambda p: (p.parent.as_posix(), int(p.stem)))

    def is_empty(self, domain: str | None = None) -> bool:
        folder = self.root / domain if domain else self.root
        return not folder.exists() or not any(folder.iterdir())

    # writing

    def write_episode(self, episode: Episode) -> Path:
        path = self.episode_path(episode.domain, episode.subtask_id, episode.seed)
        path.parent.mkdir(parents=True, exist_ok=True)
        trace = episode.trace
        arrays = {
            "frames": episode.frames,
            "progress": episode.progress,
            "scene_manipulator": trace.manipulator,
            "scene_held": trace.held,
            "scene_objects": trace.objects,
            "scene_origins": trace.origins,
        }
        if episode.domain == "target":
            arrays["states"] = trace.manipulator.astype(np.float32)
            arrays["actions"] = episode.actions
        with zipfile.ZipFile(path, "w") as archive:
            for name in sorted(arrays):
                _write_member(archive, name, arrays[name])
        _write_json(self.sidecar_path(path), self._metadata(episode))
        if episode.flows is not None:
            self.write_flows(path, episode.tracks, episode.flows, episode.flow_meta)
        return path

    @staticmethod
    def _metadata(episode: Episode) -> dict:
        trace = episode.trace
        return {
            "instruction": episode.instruction,
            "subtask": episode.subtask_id,
            "domain": episode.domain,
            "seed": episode.seed,
            "length": len(episode),
            "frame_size": episode.frame_size,
            "task": {"object_id": episode.task.object_id, "zone_id": episode.task.zone_id},
            "objects": [
                {"id": object_id, "shape": shape, "color": color}
                for object_id, shape, color in zip(trace.object_ids, trace.shapes, trace.colors)
            ],
            "zones": [[z.id, z.x0, z.y0, z.x1, z.y1] for z in trace.zones],
            "format_version": FORMAT_VERSION,
            "versions": version_stamps(),
        }

    def write_flows(
        self,
        path,
        tracks: PointTrackSet,
        flows: np.ndarray,
        flow_meta: dict,
        replace: bool = False,
    ) -> None:
        """
        Append the flow arrays of one episode and record their metadata.

        Raises:
            VersionMismatch: flow arrays with different metadata exist and ``replace`` is off
        """
        path = Path(path)
        sidecar = self.sidecar_path(path)
        metadata = json.loads(sidecar.read_text(encoding="utf-8"))
        existing = metadata.get("flow")
        if existing is not None:
            if existing == flow_meta and not replace:
                return
            if not replace:
                raise VersionMismatch(
                    f"{path} already holds flows with fingerprint {existing.get('fingerprint')}"
                )
            self._drop_members(path, FLOW_MEMBERS)
        with zipfile.ZipFile(path, "a") as archive:
            _write_member(archive, "tracks", tracks.points)
            _write_member(archive, "visibility", tracks.visibility)
            _write_member(archive, "entity_of_point", np.asarray(tracks.entity_of_point, dtype=str))
            _write_member(archive, "visaflow", flows)
        metadata["flow"] = dict(flow_meta)
        metadata["flow_source"] = self.demonstration_digest(path)
        _write_json(sidecar, metadata)

    @staticmethod
    def demonstration_digest(path) -> str:
        """SHA-256 over the recorded members, leaving out appended flows."""
        digest = hashlib.sha256()
        flow_files = {f"{name}.npy" for name in FLOW_MEMBERS}
        with zipfile.ZipFile(path) as archive:
            for name in sorted(archive.namelist()):
                if name not in flow_files:
                    digest.update(name.encode("utf-8"))
                    digest.update(archive.read(name))
        return digest.hexdigest()

    @staticmethod
    def _drop_members(path: Path, names) -> None:
        drop = {f"{name}.npy" for name in names}
        temporary = path.with_suffix(".rewrite")
        with zipfile.ZipFile(path) as source, zipfile.ZipFile(temporary, "w") as target:
            for info in source.infolist():
                if info.filename not in drop:
                    target.writestr(info, source.read(info.filename))
        temporary.replace(path)

    def write_manifest(self) -> Path:
        entries = []
        for path in self.episode_paths():
            metadata = self.read_metadata(path)
            entries.append(
                {
                    "path": path.relative_to(self.root).as_posix(),
                    "sha256": _sha256(path),
                    "demonstration_sha256": self.demonstration_digest(path),
                    "domain": metadata["domain"],
                    "subtask": metadata["subtask"],
                    "seed": metadata["seed"],
                    "length": metadata["length"],
                    "flow": (metadata.get("flow") or {}).get("fingerprint"),
                }
            )
        manifest = self.root / MANIFEST_NAME
        _write_json(manifest, {"format_version": FORMAT_VERSION, "episodes": entries})
        return manifest

    def read_manifest(self) -> dict:
        manifest = self.root / MANIFEST_NAME
        if not manifest.exists():
            raise ValidationFailure(f"no dataset manifest at {manifest}")
        return json.loads(manifest.read_text(encoding="utf-8"))

    # reading

    def read_metadata(self, path) -> dict:
        metadata = json.loads(self.sidecar_path(path).read_text(encoding="utf-8"))
        if metadata.get("format_version") != FORMAT_VERSION:
            raise VersionMismatch(
                f"{path} uses container format {metadata.get('format_version')}, "
                f"expected {FORMAT_VERSION}"
            )
        return metadata

    def read_episode(self, path, flow_meta: dict | None = None) -> Episode:
        """
        Load an episode, with its flows when present.

        Args:
            flow_meta: when given, the stored flow metadata must match it exactly
        """
        path = Path(path)
        metadata = self.read_metadata(path)
        stored_flow = metadata.get("flow")
        if flow_meta is not None and stored_flow != flow_meta:
            found = (stored_flow or {}).get("fingerprint")
            raise VersionMismatch(
                f"{path} holds flows {found}, expected {flow_meta.get('fingerprint')}"
            )
        with np.load(path, allow_pickle=False) as arrays:
            data = {name: arrays[name] for name in arrays.files}
        trace = SceneTrace(
            object_ids=tuple(entry["id"] for entry in metadata["objects"]),
            shapes=tuple(entry["shape"] for entry in metadata["objects"]),
            colors=tuple(entry["color"] for entry in metadata["objects"]),
            origins=data["scene_origins"],
            zones=tuple(Zone(*zone) for zone in metadata["zones"]),
            domain=metadata["domain"],
            manipulator=data["scene_manipulator"],
            held=data["scene_held"],
            objects=data["scene_objects"],
        )
        episode = Episode(
            frames=data["frames"],
            instruction=metadata["instruction"],
            subtask_id=metadata["subtask"],
            domain=metadata["domain"],
            seed=metadata["seed"],
            progress=data["progress"],
            trace=trace,
            task=TaskSpec(metadata["subtask"], **metadata["task"]),
            actions=data.get("actions"),
        )
        if stored_flow is not None:
            episode.tracks = PointTrackSet(
                points=data["tracks"],
                entity_of_point=data["entity_of_point"],
                visibility=data["visibility"],
            )
            episode.flows = data["visaflow"]
            episode.flow_meta = stored_flow
        return episode

    def read_dataset(self, domain: str, flow_meta: dict | None = None) -> list[Episode]:
        paths = self.episode_paths(domain)
        if not paths:
            raise ValidationFailure(f"no {domain} episodes under {self.root}")
        return [self.read_episode(path, flow_meta) for path in paths]
