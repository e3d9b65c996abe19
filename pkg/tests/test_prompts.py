import base64
import json

import pytest

from annotators.prompts import (
    ChatRequest,
    ImagePart,
    PromptError,
    TextPart,
    TooManyImages,
    build_annotation_request,
    build_generation_request,
    cad_schema_text,
    load_template,
    render,
    template_hash,
)

PNG_BYTES = b"\x89PNG\r\n\x1a\nfake"


@pytest.fixture
def renders(tmp_path):
    paths = []
    for i in range(11):
        path = tmp_path / f"view_{i}.png"
        path.write_bytes(PNG_BYTES)
        paths.append(str(path))
    return paths


def test_annotation_request_layout(renders, cube_text):
    req = build_annotation_request(cube_text, renders[:10])
    assert len(req.user_parts) == 12
    assert req.image_count == 10
    assert isinstance(req.user_parts[0], TextPart)
    assert req.user_parts[0].text.startswith("```json\n")
    assert all(isinstance(p, ImagePart) for p in req.user_parts[1:11])
    assert req.user_parts[-1].text == load_template("annotation_instruction").strip()


def test_annotation_payload(renders, cube_text):
    payload = build_annotation_request(cube_text, renders[:2], model_id="m", temperature=0.3).to_payload()
    assert payload["model"] == "m"
    assert payload["temperature"] == 0.3
    system, user = payload["messages"]
    assert system["role"] == "system"
    assert [c["type"] for c in user["content"]] == ["text", "image_url", "image_url", "text"]
    url = user["content"][1]["image_url"]["url"]
    assert url == "data:image/png;base64," + base64.b64encode(PNG_BYTES).decode("ascii")


def test_annotation_image_limits(renders, cube_text):
    with pytest.raises(TooManyImages):
        build_annotation_request(cube_text, renders)
    with pytest.raises(TooManyImages):
        build_annotation_request(cube_text, [])


def test_request_rejects_eleven_images():
    with pytest.raises(TooManyImages):
        ChatRequest("s", tuple(ImagePart(data="AAAA") for _ in range(11)))


def test_digest_is_stable_and_sensitive(renders, cube_text):
    a = build_annotation_request(cube_text, renders[:3])
    b = build_annotation_request(cube_text, renders[:3])
    assert a.digest() == b.digest()
    assert a.digest() != build_annotation_request(cube_text, renders[:3], temperature=0.5).digest()
    assert json.loads(a.serialize()) == a.to_payload()


def test_generation_request():
    req = build_generation_request("  A unit cube.  ")
    assert cad_schema_text() in req.system
    assert "{schema}" not in req.system
    payload = req.to_payload()
    assert payload["messages"][1]["content"] == "A unit cube."
    assert payload["temperature"] == 0.0
    assert set(req.templates) == {"generation_system", "cad_schema"}


def test_generation_request_needs_description():
    with pytest.raises(PromptError):
        build_generation_request(" \n")


def test_render_leaves_other_braces():
    assert render('{"a": {x}} {y}', x="1") == '{"a": 1} {y}'


def test_template_hash():
    assert template_hash("cad_schema") == template_hash("cad_schema")
    assert len(template_hash("cad_schema")) == 16
    assert template_hash("cad_schema") != template_hash("annotation_system")


def test_image_part_needs_one_source():
    with pytest.raises(PromptError):
        ImagePart()
    with pytest.raises(PromptError):
        ImagePart(path="a.png", data="AAAA")
    assert ImagePart(data="AAAA").encoded() == "AAAA"


def test_render_does_not_expand_inserted_text():
    text = render("1: {description_1}\n2: {description_2}", description_1="see {description_2}", description_2="plate")
    assert text == "1: see {description_2}\n2: plate"
