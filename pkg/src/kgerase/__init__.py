"""Private-knowledge erasure toolkit for retrieval-augmented generation."""

__version__ = "0.1.0"

from kgerase.kg import KnowledgeGraph, Triple, connected, merge_graphs, normalize_entity, remove_triples
from kgerase.partition import PartitionConfig, PrivacyPartition, make_partition
from kgerase.metrics import local_sets, privacy_connection_ratio, retention_rates, sft_accept
from kgerase.reward import RewardParams, p_schedule, reward

__all__ = [
    "KnowledgeGraph",
    "PartitionConfig",
    "PrivacyPartition",
    "RewardParams",
    "Triple",
    "connected",
    "local_sets",
    "make_partition",
    "merge_graphs",
    "normalize_entity",
    "p_schedule",
    "privacy_connection_ratio",
    "remove_triples",
    "retention_rates",
    "reward",
    "sft_accept",
]
