from fastapi import APIRouter, Depends, HTTPException, Query, Request, Response, status

from app.core.errors import (
    BadChainLink,
    BadSignature,
    DpUnreachable,
    EdgeUnreachable,
    GapInSequence,
    RitmError,
    UnknownCA,
)
from app.core.wire import (
    decode_freshness,
    decode_issuance,
    decode_signed_root,
    encode_freshness,
    encode_issuance,
    encode_signed_root,
    frame,
    frame_all,
    unframe_all,
)
from app.schemas.authdict import ca_id_from_hex
from app.schemas.dissemination import FreshnessMessage
from app.services.distribution_service import DisseminationSource


router = APIRouter(prefix="/dict", tags=["diseminacion"])

OCTET_STREAM = "application/octet-stream"


def get_source(request: Request):
    # El factory lo fija create_app según el rol (dp o edge)
    yield from request.app.state.source_factory()


def parse_ca_id(ca_id: str) -> bytes:
    try:
        return ca_id_from_hex(ca_id)
    except ValueError:
        raise HTTPException(status_code=400, detail="Identificador de CA inválido")


def _binary(body: bytes, source: DisseminationSource, ca: bytes) -> Response:
    headers = {}
    is_stale = getattr(source, "is_stale", None)
    if is_stale is not None and is_stale(ca):
        headers["X-Ritm-Stale"] = "1"
    return Response(content=body, media_type=OCTET_STREAM, headers=headers)


def _read_error(exc: RitmError) -> HTTPException:
    if isinstance(exc, UnknownCA):
        return HTTPException(status_code=404, detail=str(exc))
    if isinstance(exc, (DpUnreachable, EdgeUnreachable)):
        return HTTPException(status_code=502, detail=str(exc))
    return HTTPException(status_code=400, detail=str(exc))


@router.get("/{ca_id}/updates")
def get_updates(ca_id: str, from_n: int = Query(0, alias="from", ge=0), source: DisseminationSource = Depends(get_source)):
    ca = parse_ca_id(ca_id)
    try:
        messages = source.updates(ca, from_n)
    except RitmError as exc:
        raise _read_error(exc)
    return _binary(frame_all(encode_issuance(m) for m in messages), source, ca)


@router.get("/{ca_id}/freshness")
def get_freshness(ca_id: str, source: DisseminationSource = Depends(get_source)):
    ca = parse_ca_id(ca_id)
    try:
        message = source.freshness(ca)
    except RitmError as exc:
        raise _read_error(exc)
    if message is None:
        return Response(status_code=status.HTTP_204_NO_CONTENT)
    return _binary(frame(encode_freshness(message.statement)), source, ca)


@router.get("/{ca_id}/root")
def get_root(ca_id: str, source: DisseminationSource = Depends(get_source)):
    ca = parse_ca_id(ca_id)
    try:
        signed_root = source.root(ca)
    except RitmError as exc:
        raise _read_error(exc)
    if signed_root is None:
        return Response(status_code=status.HTTP_204_NO_CONTENT)
    return _binary(frame(encode_signed_root(signed_root)), source, ca)


# Publicación de las CAs (solo en el punto de distribución)
async def _single_frame(request: Request) -> bytes:
    try:
        frames = unframe_all(await request.body())
    except RitmError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    if len(frames) != 1:
        raise HTTPException(status_code=400, detail="Se esperaba exactamente un mensaje")
    return frames[0]


def _publish(source: DisseminationSource, ca: bytes, message) -> Response:
    publish = getattr(source, "publish", None)
    if publish is None:
        raise HTTPException(status_code=405, detail="Este nodo no acepta publicaciones")
    if message.ca_id != ca:
        raise HTTPException(status_code=400, detail="El mensaje pertenece a otra CA")
    try:
        accepted = publish(message)
    except UnknownCA as exc:
        raise HTTPException(status_code=404, detail=str(exc))
    except GapInSequence as exc:
        raise HTTPException(status_code=409, detail=str(exc))
    except (BadSignature, BadChainLink, ValueError) as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return Response(status_code=status.HTTP_201_CREATED if accepted else status.HTTP_200_OK)


@router.post("/{ca_id}/issuance")
async def post_issuance(ca_id: str, request: Request, source: DisseminationSource = Depends(get_source)):
    ca = parse_ca_id(ca_id)
    body = await _single_frame(request)
    try:
        message = decode_issuance(body)
    except RitmError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return _publish(source, ca, message)


@router.post("/{ca_id}/freshness")
async def post_freshness(ca_id: str, request: Request, source: DisseminationSource = Depends(get_source)):
    ca = parse_ca_id(ca_id)
    body = await _single_frame(request)
    try:
        message = FreshnessMessage(ca_id=ca, statement=decode_freshness(body))
    except RitmError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return _publish(source, ca, message)


@router.post("/{ca_id}/root")
async def post_root(ca_id: str, request: Request, source: DisseminationSource = Depends(get_source)):
    ca = parse_ca_id(ca_id)
    body = await _single_frame(request)
    try:
        signed_root = decode_signed_root(body)
    except RitmError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return _publish(source, ca, signed_root)
