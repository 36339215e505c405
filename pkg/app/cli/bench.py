"""ritm-bench: tiempos informativos en la máquina local (no bloquean nada)."""
from __future__ import annotations

import argparse
import random
import sys
import time
from statistics import fmean
from typing import Callable

from app.cli.common import add_log_level, configure_logging
from app.core.certificate import build_x509_certificate, encode_fixture_certificate, parse_certificate
from app.core.clock import SIMULATION_EPOCH
from app.core.crypto import hash_data, public_key_bytes, signing_key_from_seed
from app.core.tls import parse_client_hello, split_records
from app.core.wire import encode_status
from app.schemas.authdict import CA_ID_SIZE, serial_from_int
from app.services import authdict_service
from app.services.authdict_service import Dictionary, ReplicaSnapshot
from app.services.client_service import emit_client_hello
from app.services.trace_service import SERIAL_MAX, SERIAL_MIN


def _timed(fn: Callable[[], object], repeat: int) -> float:
    """Microsegundos por llamada."""
    started = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - started) / repeat * 1e6


def random_serials(rng: random.Random, count: int, exclude: set[int] | None = None) -> list[bytes]:
    exclude = exclude if exclude is not None else set()
    values: list[int] = []
    while len(values) < count:
        value = rng.randint(SERIAL_MIN, SERIAL_MAX)
        if value not in exclude:
            exclude.add(value)
            values.append(value)
    return [serial_from_int(v) for v in values]


def run_bench(dict_size: int, samples: int, seed: int, batch: int = 1000) -> list[tuple[str, float]]:
    rng = random.Random(seed)
    ca_key = signing_key_from_seed(b"bench-ca")
    ca_id = hash_data(public_key_bytes(ca_key))[:CA_ID_SIZE]
    public_key = ca_key.public_key()
    used: set[int] = set()

    started = time.perf_counter()
    dictionary = Dictionary(ca_id, random_serials(rng, dict_size, used))
    build_seconds = time.perf_counter() - started

    now = SIMULATION_EPOCH
    sr, secret = authdict_service.make_signed_root(ca_key, dictionary, now, m=1000, seed=rng.randbytes(20))
    fs = authdict_service.refresh(secret, sr, now, 10)
    absent = random_serials(rng, samples, used)

    statuses = [authdict_service.prove(dictionary, s, sr, fs) for s in absent]
    sizes = [len(encode_status(s)) for s in statuses]
    prove_us = _timed(lambda: authdict_service.prove(dictionary, absent[rng.randrange(samples)], sr, fs), samples)
    verify_us = fmean(
        _timed(lambda s=s, st=st: authdict_service.verify_status(st, s, public_key, now, 10), 1)
        for s, st in zip(absent[:100], statuses[:100])
    )

    new_batch = random_serials(rng, batch, used)
    started = time.perf_counter()
    grown, _, _ = authdict_service.insert(dictionary, new_batch)
    insert_ms = (time.perf_counter() - started) * 1e3
    next_sr, _ = authdict_service.make_signed_root(ca_key, grown, now + 1, m=1000, seed=rng.randbytes(20))
    replica = ReplicaSnapshot(dictionary=dictionary, signed_root=sr, freshness=fs)
    started = time.perf_counter()
    authdict_service.update(replica, new_batch, next_sr, public_key, now + 1)
    update_ms = (time.perf_counter() - started) * 1e3

    hello = emit_client_hello(rng)
    records, _ = split_records(hello)
    body = records[0].payload[4:]
    fixture = encode_fixture_certificate(absent[0], ca_id, "bench.example", int(now) + 86_400, ca_key)
    der = build_x509_certificate(12345, "bench.example", "Bench CA", int(now) + 86_400, ca_key, signing_key_from_seed(b"bench-host"))

    return [
        ("dict_size", dict_size),
        ("dict_build_s", round(build_seconds, 3)),
        ("status_bytes_min", min(sizes)),
        ("status_bytes_mean", round(fmean(sizes), 1)),
        ("status_bytes_max", max(sizes)),
        ("prove_us", round(prove_us, 2)),
        ("verify_status_us", round(verify_us, 2)),
        (f"ca_insert_{batch}_ms", round(insert_ms, 2)),
        (f"ra_update_{batch}_ms", round(update_ms, 2)),
        ("dpi_client_hello_us", round(_timed(lambda: parse_client_hello(body), samples), 2)),
        ("parse_fixture_cert_us", round(_timed(lambda: parse_certificate(fixture), samples), 2)),
        ("parse_x509_cert_us", round(_timed(lambda: parse_certificate(der), samples), 2)),
    ]


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="ritm-bench", description="Microbenchmarks informativos")
    parser.add_argument("--dict-size", type=int, default=339_557)
    parser.add_argument("--samples", type=int, default=1000)
    parser.add_argument("--batch", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=0)
    add_log_level(parser)
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    print(f"[INFO] Diccionario de {args.dict_size:,} revocaciones, {args.samples} consultas")
    for name, value in run_bench(args.dict_size, args.samples, args.seed, args.batch):
        print(f"{name:<24} {value}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
