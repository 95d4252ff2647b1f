from .prompts import PromptKind, RenderedPrompt, render_prompt, default_dataset_description
from .gateway import ProviderConfig, CompletionGateway

__all__ = [
    "PromptKind",
    "RenderedPrompt",
    "render_prompt",
    "default_dataset_description",
    "ProviderConfig",
    "CompletionGateway",
]
