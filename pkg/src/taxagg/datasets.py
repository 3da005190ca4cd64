"""Small built-in fixtures: the WordNet animal fragment and its two-classifier example."""

from .scores import ScoreSheet
from .taxonomy import Taxonomy, build_taxonomy

# (child, parent); multi-word WordNet lemmas use underscores
WORDNET_ANIMALS_EDGES = (
    ("domestic_animal", "animal"),
    ("carnivore", "animal"),
    ("dog", "domestic_animal"),
    ("dog", "canine"),
    ("working_dog", "dog"),
    ("hunting_dog", "dog"),
    ("watch_dog", "working_dog"),
    ("shepherd_dog", "working_dog"),
    ("pinscher", "watch_dog"),
    ("doberman", "pinscher"),
    ("rottweiler", "shepherd_dog"),
    ("hound", "hunting_dog"),
    ("bluetick", "hound"),
    ("canine", "carnivore"),
    ("feline", "carnivore"),
    ("fox", "canine"),
    ("cat", "feline"),
    ("domestic_cat", "cat"),
    ("wild_cat", "cat"),
)

ENTRY_LEVEL = ("dog", "fox", "cat")


def wordnet_animals() -> Taxonomy:
    return build_taxonomy(WORDNET_ANIMALS_EDGES)


def two_classifier_sheet(instance_id: str = "x") -> ScoreSheet:
    return ScoreSheet(
        instance_id,
        {
            "f1": {"dog": 0.7, "fox": 0.2, "cat": 0.1},
            "f2": {"dog": 0.3, "doberman": 0.4, "rottweiler": 0.3},
        },
    )
