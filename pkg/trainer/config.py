from dataclasses import asdict, dataclass

from core.exceptions import ConfigurationError

STAGES = ("pretrain", "finetune")


@dataclass(frozen=True)
class TrainConfig:
    stage: str = "pretrain"
    batch_size: int = 32
    base_lr: float = 3.6e-4
    warmup_epochs: int = 5
    min_lr_scale: float = 0.01
    epochs: int = 30
    lambda_fwd: float = 1.0
    lambda_prog: float = 0.0
    lambda_kl: float = 0.01
    weight_decay: float = 0.0
    betas: tuple[float, float] = (0.9, 0.999)
    windows_per_episode: int = 4
    val_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ConfigurationError(f"unknown training stage {self.stage!r}")
        if self.stage == "pretrain" and self.lambda_fwd != 1.0:
            raise ConfigurationError("pretraining optimises the flow loss alone (lambda_fwd = 1)")
        if self.batch_size < 1 or self.epochs < 1:
            raise ConfigurationError("batch_size and epochs must be at least 1")
        if self.warmup_epochs < 0 or not 0.0 < self.min_lr_scale <= 1.0:
            raise ConfigurationError("warmup_epochs must be >= 0 and min_lr_scale in (0, 1]")
        if min(self.lambda_fwd, self.lambda_prog, self.lambda_kl) < 0:
            raise ConfigurationError("loss weights must be non-negative")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ConfigurationError("val_fraction must lie in [0, 1)")

    @classmethod
    def from_section(cls, stage: str, section: dict) -> "TrainConfig":
        """Build from a ``train.<stage>`` section of the run configuration."""
        return cls(
            stage=stage,
            batch_size=section["batch_size"],
            base_lr=section["base_lr"],
            warmup_epochs=section["warmup_epochs"],
            min_lr_scale=section["min_lr_scale"],
            epochs=section["epochs"],
            lambda_fwd=section["lambda_fwd"],
            lambda_prog=section["lambda_prog"],
            lambda_kl=section["lambda_kl"],
            weight_decay=section["weight_decay"],
            betas=tuple(section["betas"]),
            windows_per_episode=section["windows_per_episode"],
            val_fraction=section["val_fraction"],
            seed=section["seed"],
        )

    def to_dict(self) -> dict:
        values = asdict(self)
        values["betas"] = list(self.betas)
        return values
