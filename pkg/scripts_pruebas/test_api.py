"""Endpoints HTTP de diseminación sobre un dp y un edge en memoria."""
import pytest
from fastapi.testclient import TestClient

from app.api.main import create_app, singleton_source_factory
from app.core.errors import RitmError
from app.core.wire import encode_freshness, encode_issuance, encode_signed_root, frame, unframe_all
from app.services.dissemination_client import HttpDisseminationSource, HttpPublisher
from app.services.edge_service import EdgeServer


@pytest.fixture
def client(dp):
    with TestClient(create_app(singleton_source_factory(dp), role="dp")) as test_client:
        yield test_client


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"status": "ok", "role": "dp"}


def test_publish_and_read_back(client, ca, clock):
    message = ca.revoke([b"\x01", b"\x02"])
    url = f"/dict/{ca.ca_id.hex()}"
    response = client.post(f"{url}/issuance", content=frame(encode_issuance(message)))
    assert response.status_code == 201
    assert client.post(f"{url}/issuance", content=frame(encode_issuance(message))).status_code == 200

    updates = client.get(f"{url}/updates", params={"from": 0})
    assert updates.headers["content-type"] == "application/octet-stream"
    assert unframe_all(updates.content) == [encode_issuance(message)]
    assert unframe_all(client.get(f"{url}/updates", params={"from": 2}).content) == []
    assert unframe_all(client.get(f"{url}/root").content) == [encode_signed_root(message.signed_root)]

    clock.advance(ca.delta)
    _, fresh = ca.refresh()
    assert client.post(f"{url}/freshness", content=frame(encode_freshness(fresh.statement))).status_code == 201
    assert unframe_all(client.get(f"{url}/freshness").content) == [fresh.statement.value]


def test_error_statuses(client, ca):
    url = f"/dict/{ca.ca_id.hex()}"
    ca.revoke([b"\x01"])
    gap = ca.revoke([b"\x02"])
    assert client.post(f"{url}/issuance", content=frame(encode_issuance(gap))).status_code == 409
    assert client.post(f"{url}/issuance", content=b"\x00\x00").status_code == 400
    assert client.post(f"{url}/freshness", content=frame(b"\x00" * 20)).status_code == 400
    assert client.get("/dict/zz/root").status_code == 400
    assert client.get(f"/dict/{'ab' * 8}/root").status_code == 404
    other = f"/dict/{'ab' * 8}"
    assert client.post(f"{other}/issuance", content=frame(encode_issuance(gap))).status_code == 400


def test_root_missing_is_no_content(make_dp, registry, ca):
    empty = make_dp(registry)
    with TestClient(create_app(singleton_source_factory(empty), role="dp")) as test_client:
        assert test_client.get(f"/dict/{ca.ca_id.hex()}/root").status_code == 204
        assert test_client.get(f"/dict/{ca.ca_id.hex()}/freshness").status_code == 204


def test_http_source_against_edge(client, dp, ca, clock):
    ca_hex = ca.ca_id.hex()
    client.post(f"/dict/{ca_hex}/issuance", content=frame(encode_issuance(ca.revoke([b"\x07"]))))
    source = HttpDisseminationSource(str(client.base_url), session=client)
    edge = EdgeServer(source, clock, ttl=0, name="edge-http")
    with TestClient(create_app(singleton_source_factory(edge), role="edge")) as edge_client:
        assert edge_client.post(f"/dict/{ca_hex}/root", content=frame(encode_signed_root(ca.signed_root))).status_code == 405
        remote = HttpDisseminationSource(str(edge_client.base_url), session=edge_client)
        messages = remote.updates(ca.ca_id, 0)
        assert [m.serials for m in messages] == [(b"\x07",)]
        assert remote.root(ca.ca_id) == ca.signed_root
        assert remote.freshness(ca.ca_id).statement.value == ca.signed_root.anchor


def test_http_publisher_against_dp(client, dp, ca):
    publisher = HttpPublisher(str(client.base_url), session=client)
    first = ca.revoke([b"\x01"])
    assert publisher.publish(first) is True
    assert publisher.publish(first) is False
    ca.revoke([b"\x02"])
    with pytest.raises(RitmError):
        publisher.publish(ca.revoke([b"\x03"]))
    assert dp.root(ca.ca_id) == first.signed_root
