"""Chat requests for description generation and description-to-CAD generation."""
import base64
import hashlib
import json
import os
import re
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from config import DEFAULT_MODEL, MAX_IMAGES, TEMPLATES_DIR

TEMPLATE_VERSION = "v1"
SLOT_PATTERN = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")


class PromptError(ValueError):
    pass


class TooManyImages(PromptError):
    """Image count outside the allowed 1..MAX_IMAGES range."""


@dataclass(frozen=True)
class TextPart:
    text: str

    def to_content(self) -> dict:
        return {"type": "text", "text": self.text}


@dataclass(frozen=True)
class ImagePart:
    """A path on disk or an already base64-encoded PNG payload."""
    path: Optional[str] = None
    data: Optional[str] = None

    def __post_init__(self):
        if (self.path is None) == (self.data is None):
            raise PromptError("image part needs exactly one of path or data")

    def encoded(self) -> str:
        if self.data is not None:
            return self.data
        return base64.b64encode(Path(self.path).read_bytes()).decode("ascii")

    def to_content(self) -> dict:
        return {"type": "image_url", "image_url": {"url": f"data:image/png;base64,{self.encoded()}"}}


UserPart = Union[TextPart, ImagePart]


@dataclass(frozen=True)
class ChatRequest:
    system: str
    user_parts: Tuple[UserPart, ...]
    model_id: str = DEFAULT_MODEL
    temperature: float = 0.0
    max_tokens: int = 2048
    templates: Dict[str, str] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        images = sum(isinstance(p, ImagePart) for p in self.user_parts)
        if images > MAX_IMAGES:
            raise TooManyImages(f"{images} images, at most {MAX_IMAGES} allowed")
        if self.temperature < 0:
            raise PromptError("temperature must be >= 0")

    @property
    def image_count(self) -> int:
        return sum(isinstance(p, ImagePart) for p in self.user_parts)

    def to_payload(self) -> dict:
        """OpenAI-compatible chat-completions body."""
        if all(isinstance(p, TextPart) for p in self.user_parts):
            user_content = "\n\n".join(p.text for p in self.user_parts)
        else:
            user_content = [p.to_content() for p in self.user_parts]
        return {
            "model": self.model_id,
            "messages": [
                {"role": "system", "content": self.system},
                {"role": "user", "content": user_content},
            ],
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }

    def serialize(self) -> str:
        return json.dumps(self.to_payload(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.serialize().encode("utf-8")).hexdigest()


@lru_cache(maxsize=None)
def load_template(name: str, version: str = TEMPLATE_VERSION) -> str:
    path = os.path.join(TEMPLATES_DIR, f"{name}_{version}.txt")
    with open(path, "r", encoding="utf-8") as f:
        return f.read()


def template_hash(name: str, version: str = TEMPLATE_VERSION) -> str:
    return hashlib.sha256(load_template(name, version).encode("utf-8")).hexdigest()[:16]


def render(template: str, **values: str) -> str:
    """Fill {name} slots in one pass; other braces (JSON in the templates) are left alone."""
    return SLOT_PATTERN.sub(lambda m: values.get(m.group(1), m.group(0)), template)


def cad_schema_text() -> str:
    return load_template("cad_schema").rstrip("\n")


def build_annotation_request(
    minimal_json: str,
    images: List[str],
    model_id: str = DEFAULT_MODEL,
    temperature: float = 0.0,
    max_tokens: int = 2048,
) -> ChatRequest:
    """JSON block, then the renders, then the instruction."""
    if not 1 <= len(images) <= MAX_IMAGES:
        raise TooManyImages(f"annotation needs 1 to {MAX_IMAGES} images, got {len(images)}")
    parts = [TextPart(f"```json\n{minimal_json.strip()}\n```")]
    parts.extend(ImagePart(path=str(p)) for p in images)
    parts.append(TextPart(load_template("annotation_instruction").strip()))
    return ChatRequest(
        system=load_template("annotation_system").strip(),
        user_parts=tuple(parts),
        model_id=model_id,
        temperature=temperature,
        max_tokens=max_tokens,
        templates={
            "annotation_system": template_hash("annotation_system"),
            "annotation_instruction": template_hash("annotation_instruction"),
        },
    )


def build_generation_request(
    description: str,
    model_id: str = DEFAULT_MODEL,
    temperature: float = 0.0,
    max_tokens: int = 2048,
) -> ChatRequest:
    """Greedy by default; the system message carries the sequence schema verbatim."""
    if not description or not description.strip():
        raise PromptError("description is empty")
    system = render(load_template("generation_system"), schema=cad_schema_text()).strip()
    return ChatRequest(
        system=system,
        user_parts=(TextPart(description.strip()),),
        model_id=model_id,
        temperature=temperature,
        max_tokens=max_tokens,
        templates={"generation_system": template_hash("generation_system"), "cad_schema": template_hash("cad_schema")},
    )
