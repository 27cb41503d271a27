"""Weapon keyword detection and card materialization.

The King's prose is scanned against a seven-category keyword lexicon; the
earliest hit (by character offset) materializes into a playable card whose
name, description, power, and battle dialogue come from the generation
backend. Only the King's text ever forges cards.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass

from .backends import Backend, generate_with_repair
from .errors import CapacityError, ContractError, ValidationError
from .util import clamp, derived_uuid, extract_json_objects, sentence_at, stable_hash, truncate

logger = logging.getLogger(__name__)

MAX_CARDS = 4
POWER_MIN = 10
POWER_MAX = 40
NAME_LIMIT = 60
DESCRIPTION_LIMIT = 300

CARD_FIELDS = ("name", "description", "power", "effect_description", "player_line", "king_line")


@dataclass(frozen=True)
class WeaponCategory:
    id: str
    canonical: str
    synonyms: tuple[str, ...] = ()

    def terms(self) -> tuple[str, ...]:
        return (self.canonical,) + self.synonyms


@dataclass(frozen=True)
class WeaponLexicon:
    categories: tuple[WeaponCategory, ...]

    def __post_init__(self):
        if len(self.categories) != 7:
            raise ValidationError(f"lexicon must have exactly 7 categories, got {len(self.categories)}")
        seen_ids: set[str] = set()
        seen_terms: set[str] = set()
        for cat in self.categories:
            if cat.id in seen_ids:
                raise ValidationError(f"duplicate category id {cat.id!r}")
            seen_ids.add(cat.id)
            for term in cat.terms():
                if not term or term != term.lower():
                    raise ValidationError(f"lexicon term {term!r} must be non-empty lowercase")
                if term in seen_terms:
                    raise ValidationError(f"term {term!r} appears in two categories")
                seen_terms.add(term)

    def canonical_terms(self) -> list[str]:
        return [cat.canonical for cat in self.categories]


# Categories beyond sword/shield/dagger are plain ancient-armory archetypes;
# synonym lists widen natural prose hits and are overridable via config file.
_DEFAULT_CATEGORIES = (
    WeaponCategory("sword", "sword", ("blade", "saber", "scimitar")),
    WeaponCategory("shield", "shield", ("buckler", "aegis")),
    WeaponCategory("dagger", "dagger", ("knife", "dirk")),
    WeaponCategory("spear", "spear", ("lance", "javelin", "pike")),
    WeaponCategory("bow", "bow", ("longbow", "crossbow", "arrow")),
    WeaponCategory("axe", "axe", ("hatchet", "battleaxe")),
    WeaponCategory("hammer", "hammer", ("mallet", "warhammer", "maul")),
)


def default_lexicon() -> WeaponLexicon:
    """The built-in seven-category lexicon."""
    return WeaponLexicon(_DEFAULT_CATEGORIES)


def load_lexicon(path: str) -> WeaponLexicon:
    """Load a lexicon override file: {"categories": [{id, canonical, synonyms}]}."""
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    cats = tuple(
        WeaponCategory(c["id"], c["canonical"], tuple(c.get("synonyms", ())))
        for c in doc["categories"]
    )
    return WeaponLexicon(cats)


@dataclass(frozen=True)
class KeywordHit:
    category: str
    term: str
    sentence: str





def _term_pattern(term: str) -> re.Pattern:
    # \w-based lookarounds instead of \b so multi-word terms stay anchored
    # at both ends.
    return re.compile(r"(?<!\w)" + re.escape(term) + r"(?!\w)", re.IGNORECASE)


def detect_keyword(text: str, lexicon: WeaponLexicon) -> KeywordHit | None:
    """Earliest word-boundary lexicon match in ``text``, or None.

    Ties at the same offset prefer the longer term, then lexicon order.
    At most one detection per text.
    """
    best: tuple[int, int, int] | None = None
    best_hit: tuple[str, str, int] | None = None
    order = 0
    for cat in lexicon.categories:
        for term in cat.terms():
            match = _term_pattern(term).search(text)
            if match is not None:
                key = (match.start(), -len(term), order)
                if best is None or key < best:
                    best = key
                    best_hit = (cat.id, term, match.start())
            order += 1
    if best_hit is None:
        return None
    category, term, offset = best_hit
    return KeywordHit(category=category, term=term, sentence=sentence_at(text, offset))


@dataclass
class WeaponCard:
    id: str
    category: str
    name: str
    description: str
    power: int
    effect_description: str
    player_line: str
    king_line: str
    source_excerpt: str
    artwork: "object | None" = None  # SceneImageRef, kept loose to avoid an import cycle

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "category": self.category,
            "name": self.name,
            "description": self.description,
            "power": self.power,
            "effect_description": self.effect_description,
            "player_line": self.player_line,
            "king_line": self.king_line,
            "source_excerpt": self.source_excerpt,
            "artwork": self.artwork.to_dict() if self.artwork is not None else None,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "WeaponCard":
        from .backends import SceneImageRef

        artwork = doc.get("artwork")
        return cls(
            id=doc["id"],
            category=doc["category"],
            name=doc["name"],
            description=doc["description"],
            power=doc["power"],
            effect_description=doc["effect_description"],
            player_line=doc["player_line"],
            king_line=doc["king_line"],
            source_excerpt=doc["source_excerpt"],
            artwork=SceneImageRef.from_dict(artwork) if artwork else None,
        )


def fallback_power(name: str) -> int:
    """Deterministic power for cards whose backend reply lacked an integer."""
    return POWER_MIN + (stable_hash(name) % 31)


def parse_card_fields(raw: str) -> dict:
    """Extract and normalize the card JSON from a backend reply.

    Raises ContractError when no object carrying card fields is present or
    when name/description are unusable. Power is normalized, never rejected.
    """
    for obj in _candidate_objects(raw):
        name = obj.get("name")
        description = obj.get("description")
        if not isinstance(name, str) or not name.strip():
            raise ContractError("card 'name' must be a non-empty string")
        if not isinstance(description, str) or not description.strip():
            raise ContractError("card 'description' must be a non-empty string")
        name = truncate(name.strip(), NAME_LIMIT)
        description = truncate(description.strip(), DESCRIPTION_LIMIT)
        power = obj.get("power")
        if isinstance(power, int) and not isinstance(power, bool):
            power = clamp(power, POWER_MIN, POWER_MAX)
        else:
            power = fallback_power(name)
        fields = {"name": name, "description": description, "power": power}
        for key in ("effect_description", "player_line", "king_line"):
            value = obj.get(key)
            fields[key] = value if isinstance(value, str) else ""
        return fields
    raise ContractError("no JSON object with card fields found")


def _candidate_objects(raw: str):
    for obj in extract_json_objects(raw):
        if any(key in obj for key in CARD_FIELDS):
            yield obj


CARD_SYSTEM_PROMPT = (
    "You are the armory scribe of an ancient court. A weapon spoken into a tale "
    "must be recorded as a card. Reply with a single JSON object and nothing else, "
    'with fields: "name" (evocative weapon name, at most 60 characters), '
    '"description" (its look and legend, at most 300 characters), '
    '"power" (integer from 10 to 40), '
    '"effect_description" (what happens when it is used in battle), '
    '"player_line" (one line the storyteller\'s heroine speaks when wielding it), '
    '"king_line" (one line the King answers with). '
    "Ground every field in the story record you are given."
)


def build_card_prompt(story_record: str, category: str, source_excerpt: str) -> str:
    return (
        f"Story record so far:\n{story_record}\n\n"
        f"Weapon category: {category}\n"
        f"The King's words that conjured it: {source_excerpt}\n\n"
        "Record this weapon as a card."
    )


def forge_card(session, hit: KeywordHit, backend: Backend, story_record: str) -> WeaponCard | None:
    """Materialize a detected keyword into a WeaponCard and append it.

    Best-effort: a contract failure after the repair retry skips the card and
    returns None (the turn still commits). Raises CapacityError when the
    session already holds four cards.
    """
    if len(session.weapons) >= MAX_CARDS:
        raise CapacityError("session already holds four weapon cards")
    try:
        fields = generate_with_repair(
            backend,
            system=CARD_SYSTEM_PROMPT,
            user_text=build_card_prompt(story_record, hit.category, hit.sentence),
            parse=parse_card_fields,
            temperature=0.8,
            seed=session.seed,
        )
    except ContractError as err:
        logger.warning("card forge skipped for %s: %s", hit.category, err)
        return None
    card = WeaponCard(
        id=derived_uuid(session.id, "card", len(session.weapons), fields["name"]),
        category=hit.category,
        name=fields["name"],
        description=fields["description"],
        power=fields["power"],
        effect_description=fields["effect_description"],
        player_line=fields["player_line"],
        king_line=fields["king_line"],
        source_excerpt=hit.sentence,
        artwork=session.background,
    )
    session.weapons.append(card)
    return card
