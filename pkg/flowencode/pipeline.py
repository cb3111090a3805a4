"""
Semantic action flow extraction.

For every frame t the representation is

    z_t = encode(amplify(o_t, build_mask(P_t, r), alpha))

where P_t are the tracked points of the entities grounded on frame 0.
``FlowStream`` computes it online, one frame at a time; offline extraction
over a stored episode runs the very same stream, so rollout features and
training features agree bitwise.
"""

import hashlib
import json
import logging
from dataclasses import asdict, dataclass

import numpy as np

from core.exceptions import ConfigurationError, ValidationFailure
from core.versions import PIPELINE_VERSION
from envsim.grounding import entity_anchors
from envsim.world import Frame
from flowtrace.grounders import build_grounder, ground
from flowtrace.sampling import sample_points
from flowtrace.trackers import build_tracker
from flowtrace.types import PointTrackSet

from .encoder import encode_pixels, get_encoder
from .masks import amplify, build_mask

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FlowConfig:
    alpha: float = 0.5
    radius: float = 3.0
    density: float = 4.0
    max_points: int = 64
    tracker: str = "oracle"
    grounder: str = "oracle"
    search_radius: int = 4
    encoder_seed: int = 0
    embed_dim: int = 128
    patch_size: int = 8
    encoder_depth: int = 2
    encoder_heads: int = 4
    static_mask: bool = False
    drop_manipulator: bool = False
    sample_seed: int = 0

    def __post_init__(self):
        if self.alpha < 0:
            raise ConfigurationError("flow.alpha must be non-negative")
        if self.radius <= 0:
            raise ConfigurationError("flow.radius must be positive")
        if self.density <= 0:
            raise ConfigurationError("flow.density must be positive")

    @classmethod
    def from_dict(cls, values: dict) -> "FlowConfig":
        known = {key: values[key] for key in cls.__dataclass_fields__ if key in values}
        return cls(**known)

    def metadata(self) -> dict:
        """Everything that determines the flow arrays, plus the pipeline version."""
        return {**asdict(self), "pipeline_version": PIPELINE_VERSION}

    def fingerprint(self) -> str:
        canonical = json.dumps(self.metadata(), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]

    def record(self) -> dict:
        """Metadata stored next to extracted flows and inside checkpoints."""
        return {**self.metadata(), "fingerprint": self.fingerprint()}

    def encoder(self, frame_size: int = 64):
        return get_encoder(
            self.encoder_seed,
            self.embed_dim,
            self.patch_size,
            self.encoder_depth,
            self.encoder_heads,
            frame_size,
        )


@dataclass(eq=False)
class FlowRep:
    vector: np.ndarray
    frame_index: int
    alpha_used: float

    def __post_init__(self):
        if not np.all(np.isfinite(self.vector)):
            raise ValidationFailure(f"non-finite FlowRep at frame {self.frame_index}")


def encode(frame: Frame, encoder, alpha_used: float = 0.0) -> FlowRep:
    return FlowRep(
        vector=encode_pixels(frame.pixels, encoder),
        frame_index=frame.timestamp,
        alpha_used=alpha_used,
    )


class FlowStream:
    """
    Online flow extraction for one episode or one rollout subtask.

    ``start`` grounds the instruction on the first frame, samples query
    points and encodes frame 0; ``push`` tracks the points into the next
    frame and encodes it.
    """

    def __init__(self, config: FlowConfig, instruction: str, frame_size: int = 64):
        self.config = config
        self.instruction = instruction
        self.encoder = config.encoder(frame_size)
        self.grounder = build_grounder(config.grounder)
        self.tracker = build_tracker(config.tracker, search_radius=config.search_radius)
        self.trajectory: list[np.ndarray] = []
        self.visibility: list[np.ndarray] = []

    def _anchors(self, state):
        if state is None:
            return None
        return entity_anchors(state, self.masks.entity_ids, self.encoder.frame_size)

    def _encode(self, frame: Frame, points: np.ndarray) -> FlowRep:
        height, width = frame.pixels.shape[:2]
        source = self.initial_points if self.config.static_mask else points
        mask = build_mask(source, self.config.radius, height, width)
        amplified = amplify(frame, mask, self.config.alpha)
        return encode(amplified, self.encoder, alpha_used=self.config.alpha)

    def start(self, frame: Frame, state=None) -> FlowRep:
        self.masks = ground(
            frame,
            self.instruction,
            self.grounder,
            state=state,
            no_hand=self.config.drop_manipulator,
        )
        initial = sample_points(
            self.masks,
            density=self.config.density,
            seed=self.config.sample_seed,
            max_points=self.config.max_points,
        )
        self.labels = initial.labels
        points = self.tracker.reset(frame.pixels, initial, self._anchors(state))
        self.initial_points = points.copy()
        self.trajectory = [points]
        self.visibility = [self.tracker.visible.copy()]
        return self._encode(frame, points)

    def push(self, frame: Frame, state=None) -> FlowRep:
        if not self.trajectory:
            raise ValidationFailure("FlowStream.push called before start")
        points = self.tracker.advance(frame.pixels, self._anchors(state))
        self.trajectory.append(points)
        self.visibility.append(self.tracker.visible.copy())
        return self._encode(frame, points)

    def track_set(self) -> PointTrackSet:
        return PointTrackSet(
            points=np.stack(self.trajectory, axis=1),
            entity_of_point=np.asarray(self.labels),
            visibility=np.stack(self.visibility, axis=1),
        )


def run_flow_pipeline(episode, config: FlowConfig) -> tuple[list[FlowRep], PointTrackSet]:
    """
    Extract the FlowRep sequence and the point tracks of a stored episode.

    The hidden scene trace supplies ground truth to the oracle grounder and
    the oracle tracker; learned components only ever see the frames.
    """
    stream = FlowStream(config, episode.instruction, frame_size=episode.frame_size)
    flows = [stream.start(episode.frame(0), episode.world_state(0))]
    for t in range(1, len(episode)):
        flows.append(stream.push(episode.frame(t), episode.world_state(t)))
    return flows, stream.track_set()


def extract_flowrep_sequence(episode, config: FlowConfig) -> list[FlowRep]:
    return run_flow_pipeline(episode, config)[0]


def attach_flows(episode, config: FlowConfig) -> None:
    """Compute and attach tracks, the (T, d) flow array and its metadata."""
    flows, tracks = run_flow_pipeline(episode, config)
    episode.tracks = tracks
    episode.flows = np.stack([flow.vector for flow in flows])
    episode.flow_meta = config.record()
