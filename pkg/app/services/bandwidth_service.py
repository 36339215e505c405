from __future__ import annotations

import math

from app.core.wire import FRAME_HEADER, FRESHNESS_SIZE, encode_issuance
from app.schemas.dissemination import UpdateLog


FRESHNESS_FRAME_SIZE = FRAME_HEADER.size + FRESHNESS_SIZE


def bandwidth_account(log: UpdateLog, delta: float, start: float, end: float) -> list[int]:
    """Bytes que descarga una RA por ventana Δ en [start, end).

    Por CA y ventana: los mensajes de emisión publicados en ella, o una sola
    declaración de frescura si no hubo emisiones (la raíz nueva ya trae su ancla).
    """
    windows = max(0, math.ceil((end - start) / delta))
    totals = [0] * windows
    for ca_log in log.cas:
        issued = [0] * windows
        for message, published_at in zip(ca_log.issuances, ca_log.published_at):
            w = int((published_at - start) // delta)
            if 0 <= w < windows:
                issued[w] += FRAME_HEADER.size + len(encode_issuance(message))
        for w in range(windows):
            window_end = start + (w + 1) * delta
            if issued[w]:
                totals[w] += issued[w]
            elif ca_log.active_since is not None and ca_log.active_since < window_end:
                totals[w] += FRESHNESS_FRAME_SIZE
    return totals
