"""Device vector semantics and the token locking protocol."""

from lore.runtime.device import (
    Crash,
    Device,
    Devices,
    Interact,
    Label,
    Recover,
    Sync,
    Timeout,
    apply_label,
    crash,
    init_program,
    interact,
    recover,
    sync,
    timeout,
    token_holders,
)
from lore.runtime.protocol import (
    Grant,
    Message,
    Release,
    Request,
    TimeoutFired,
    acquire,
    lock_protocol_step,
    lowest_live,
    reclaim,
)

__all__ = [
    "Crash", "Device", "Devices", "Grant", "Interact", "Label", "Message", "Recover",
    "Release", "Request", "Sync", "Timeout", "TimeoutFired", "acquire", "apply_label",
    "crash", "init_program", "interact", "lock_protocol_step", "lowest_live", "reclaim",
    "recover", "sync", "timeout", "token_holders",
]
