from pynorms.lm._prompt import (
    FIXED_LABEL,
    FLEX_LABEL,
    Interaction,
    MetaPrompt,
    assistant_prompt,
    build_meta_prompt,
    render_interaction,
)
from pynorms.lm._backends import (
    AssistantSeat,
    Backend,
    BackendConfigurationError,
    Diagnostics,
    EpochFailureError,
    LMTransportError,
    LmRequest,
    LmResponse,
    RemoteBackend,
    Role,
    StubBackend,
    UnstructuredDirectiveWarning,
    assistant_act,
    generate_directive,
    get_backend,
    list_backends,
)
from pynorms.lm._mock_server import MockLMServer

__all__ = [
    'FIXED_LABEL', 'FLEX_LABEL', 'Interaction', 'MetaPrompt', 'assistant_prompt', 'build_meta_prompt',
    'render_interaction',
    'AssistantSeat', 'Backend', 'BackendConfigurationError', 'Diagnostics', 'EpochFailureError', 'LMTransportError',
    'LmRequest', 'LmResponse', 'RemoteBackend', 'Role', 'StubBackend', 'UnstructuredDirectiveWarning',
    'assistant_act', 'generate_directive', 'get_backend', 'list_backends',
    'MockLMServer',
]
