"""Version stamps recorded in every artifact written to disk."""

PIPELINE_VERSION = "visaflow-pipeline/1"
ENV_VERSION = "envsim/1"
MODEL_VERSION = "policymodel/1"
FORMAT_VERSION = 1


def version_stamps() -> dict[str, str | int]:
    return {
        "pipeline": PIPELINE_VERSION,
        "env": ENV_VERSION,
        "model": MODEL_VERSION,
        "format": FORMAT_VERSION,
    }
