"""Prompt building, endpoint client and pairwise judging for the annotation corpus."""
import os

from config import API_KEY_ENV
from annotators.client import (
    AuthError,
    EndpointClient,
    EndpointError,
    ProviderError,
    RateLimited,
    TransportError,
    call_endpoint,
)
from annotators.prompts import ChatRequest, TooManyImages, build_annotation_request, build_generation_request


def get_api_key(key: str = API_KEY_ENV) -> str:
    """API key from the environment; empty string when unset."""
    return os.environ.get(key, "").strip()


def get_client(endpoint: str, audit_path=None, key: str = API_KEY_ENV) -> EndpointClient:
    """Client for the configured endpoint; raises AuthError before any request when the key is missing."""
    api_key = get_api_key(key)
    if not api_key:
        raise AuthError(f"environment variable {key} is not set")
    return EndpointClient(api_key, endpoint, audit_path=audit_path)
