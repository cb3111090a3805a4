"""
Validation of the run configuration tree.

One serializer per section. Every field is required, so a resolved tree
never has missing keys, and unknown keys are rejected instead of being
dropped silently.
"""

from collections.abc import Mapping

from rest_framework import serializers

from envsim.tasks import SUBTASKS


class StrictSerializer(serializers.Serializer):
    """Serializer that refuses keys it does not declare."""

    def to_internal_value(self, data):
        if isinstance(data, Mapping):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError({key: ["unknown key"] for key in unknown})
        return super().to_internal_value(data)


class EnvSectionSerializer(StrictSerializer):
    frame_size = serializers.IntegerField(min_value=8)
    step_cap = serializers.IntegerField(min_value=1)
    num_objects = serializers.IntegerField(min_value=1)
    subtasks = serializers.ListField(child=serializers.ChoiceField(choices=SUBTASKS), min_length=1)
    source_count = serializers.IntegerField(min_value=1)
    target_count = serializers.IntegerField(min_value=1)
    data_seed = serializers.IntegerField(min_value=0)


class FlowSectionSerializer(StrictSerializer):
    alpha = serializers.FloatField(min_value=0.0)
    radius = serializers.FloatField()
    density = serializers.FloatField()
    max_points = serializers.IntegerField(min_value=1)
    tracker = serializers.CharField()
    grounder = serializers.CharField()
    search_radius = serializers.IntegerField(min_value=0)
    encoder_seed = serializers.IntegerField(min_value=0)
    embed_dim = serializers.IntegerField(min_value=1)
    patch_size = serializers.IntegerField(min_value=1)
    encoder_depth = serializers.IntegerField(min_value=1)
    encoder_heads = serializers.IntegerField(min_value=1)
    static_mask = serializers.BooleanField()
    drop_manipulator = serializers.BooleanField()
    sample_seed = serializers.IntegerField(min_value=0)

    def validate_radius(self, value):
        if value <= 0:
            raise serializers.ValidationError("must be positive")
        return value

    def validate_density(self, value):
        if value <= 0:
            raise serializers.ValidationError("must be positive")
        return value


class ModelSectionSerializer(StrictSerializer):
    d_model = serializers.IntegerField(min_value=1)
    depth = serializers.IntegerField(min_value=1)
    heads = serializers.IntegerField(min_value=1)
    h = serializers.IntegerField(min_value=1)
    n = serializers.IntegerField(min_value=1)
    k = serializers.IntegerField(min_value=1)
    mlp_ratio = serializers.IntegerField(min_value=1)
    goal_conditioning = serializers.BooleanField()


class StageSectionSerializer(StrictSerializer):
    batch_size = serializers.IntegerField(min_value=1)
    base_lr = serializers.FloatField(min_value=0.0)
    warmup_epochs = serializers.IntegerField(min_value=0)
    min_lr_scale = serializers.FloatField(min_value=0.0, max_value=1.0)
    epochs = serializers.IntegerField(min_value=1)
    lambda_fwd = serializers.FloatField(min_value=0.0)
    lambda_prog = serializers.FloatField(min_value=0.0)
    lambda_kl = serializers.FloatField(min_value=0.0)
    weight_decay = serializers.FloatField(min_value=0.0)
    betas = serializers.ListField(
        child=serializers.FloatField(min_value=0.0, max_value=1.0), min_length=2, max_length=2
    )
    windows_per_episode = serializers.IntegerField(min_value=1)
    val_fraction = serializers.FloatField(min_value=0.0, max_value=0.5)
    seed = serializers.IntegerField(min_value=0)


class TrainSectionSerializer(StrictSerializer):
    pretrain = StageSectionSerializer()
    finetune = StageSectionSerializer()


class EvalSectionSerializer(StrictSerializer):
    n_sequences = serializers.IntegerField(min_value=1)
    seed = serializers.IntegerField(min_value=0)
    chain_length = serializers.IntegerField(min_value=1)
    step_cap = serializers.IntegerField(min_value=1)
    seeds = serializers.ListField(child=serializers.IntegerField(min_value=0), min_length=1)
    scaling_counts = serializers.ListField(
        child=serializers.IntegerField(min_value=1), min_length=1
    )


SECTION_SERIALIZERS = {
    "env": EnvSectionSerializer,
    "flow": FlowSectionSerializer,
    "model": ModelSectionSerializer,
    "train": TrainSectionSerializer,
    "eval": EvalSectionSerializer,
}
