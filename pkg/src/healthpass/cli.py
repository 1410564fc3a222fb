"""``healthpass`` command line: holder, site, issuer and verifier tools.

Exit codes: 0 success / accepted, 1 verification rejected, 2 usage error,
3 I/O, network or configuration error.  Data goes to stdout, errors to
stderr.  ``--json`` prints exactly one JSON object per command.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import secrets
import sys
import time
from pathlib import Path
from typing import List, Optional

from healthpass import wire
from healthpass.crypto.group import GroupElement, GroupParams, get_group
from healthpass.errors import (
    DecodeError,
    HealthPassError,
    HolderKeyMismatchError,
    IssuerAuthError,
    OpaqueError,
)
from healthpass.model import Outcome, TestResult, UploadRecord
from healthpass.protocol import (
    SiteStore,
    VerifierPolicy,
    WalletRecord,
    WalletState,
    begin_registration,
    holder_accept_download,
    open_result,
    present,
    read_keystore,
    setup_holder,
    setup_issuer,
    site_register,
    verify,
    write_keystore,
)
from healthpass.registry import (
    HttpTransport,
    RecordStore,
    RegistryClient,
    RegistryService,
    load_config,
    load_sites,
    make_server,
)

EXIT_OK, EXIT_REJECTED, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
DEFAULT_WALLET = "wallet.json"
DEFAULT_SERVER = "http://127.0.0.1:8080"

log = logging.getLogger("healthpass")


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_IO) -> None:
        super().__init__(message)
        self.code = code


def _group(args) -> GroupParams:
    allow = os.environ.get("HEALTHPASS_ALLOW_TEST_GROUP") == "1"
    return get_group(args.group or os.environ.get("HEALTHPASS_GROUP") or "modp2048",
                     allow_test=allow)


def _rng():
    return secrets.SystemRandom()


def _now(args) -> int:
    return int(args.now) if getattr(args, "now", None) is not None else int(time.time())


def _read_text(source: str) -> str:
    if source == "-":
        return sys.stdin.read().strip()
    try:
        return Path(source).read_text().strip()
    except OSError as exc:
        raise CliError(f"cannot read {source}: {exc.strerror}") from None


def _write_text(dest: Optional[str], text: str) -> bool:
    """Write to a file; returns False when the caller should print instead."""
    if not dest or dest == "-":
        return False
    Path(dest).write_text(text + "\n")
    return True


def _issuer_pk(value: str, group: GroupParams) -> GroupElement:
    text = _read_text(value) if value == "-" or Path(value).exists() else value
    try:
        return GroupElement.from_bytes(wire.b64u_decode(text), group)
    except (DecodeError, HealthPassError) as exc:
        raise CliError(f"invalid issuer public key: {exc}") from None


def _client(args, group: GroupParams) -> RegistryClient:
    url = args.server or os.environ.get("HEALTHPASS_SERVER") or DEFAULT_SERVER
    return RegistryClient(HttpTransport(url), group)


def _wallet_path(args) -> Path:
    return Path(args.wallet or os.environ.get("HEALTHPASS_WALLET") or DEFAULT_WALLET)


def _load_wallet(args, group: GroupParams) -> WalletState:
    path = _wallet_path(args)
    if not path.exists():
        raise CliError(f"no wallet at {path}; run 'healthpass holder init' first")
    return WalletState.load(path, group)


# -- holder ----------------------------------------------------------------

def holder_init(args) -> dict:
    group = _group(args)
    wallet_path = _wallet_path(args)
    keystore = args.keystore or str(wallet_path) + ".key"
    if wallet_path.exists():
        raise CliError(f"wallet {wallet_path} already exists")
    keys = setup_holder(group, _rng(), keystore)
    WalletState(keystore=keystore, group=group.name).save(wallet_path, group)
    return {"wallet": str(wallet_path), "keystore": keystore,
            "holder_pk": wire.b64u_encode(keys.pk.to_bytes())}


def holder_register(args) -> dict:
    group = _group(args)
    wallet = _load_wallet(args, group)
    keys = read_keystore(wallet.keystore, allow_test_group=group.test_only)
    ot_id, payload = begin_registration(keys, _rng())
    wallet.records.append(WalletRecord(ot_id=ot_id))
    wallet.save(_wallet_path(args), group)
    text = wire.b64u_encode(wire.encode(payload, group))
    out = {"written_to": args.out} if _write_text(args.out, text) else {"payload": text}
    if args.reveal:
        out["ot_id"] = wire.b64u_encode(ot_id)
    return out


def holder_download(args) -> dict:
    group = _group(args)
    wallet = _load_wallet(args, group)
    keys = read_keystore(wallet.keystore, allow_test_group=group.test_only)
    sess_id = wire.b64u_decode(args.sess_id)
    client = _client(args, group)
    issuer_pk = _issuer_pk(args.issuer_pk, group) if args.issuer_pk else client.issuer_pk()
    c = client.download(sess_id)
    for record in wallet.pending():
        try:
            opened = open_result(c, issuer_pk, record.ot_id)
        except OpaqueError:
            continue
        except IssuerAuthError:
            raise CliError("record is not signed by the issuer", EXIT_REJECTED) from None
        try:
            result = holder_accept_download(opened, keys.pk)
        except HolderKeyMismatchError:
            raise CliError("record is bound to a different holder key", EXIT_REJECTED) from None
        record.sess_id, record.c, record.result = sess_id, c, result
        record.downloaded_at = _now(args)
        wallet.save(_wallet_path(args), group)
        return {"sess_id": args.sess_id, "result": result.to_json()}
    raise CliError("no pending registration opens this record", EXIT_REJECTED)


def holder_present(args) -> dict:
    group = _group(args)
    wallet = _load_wallet(args, group)
    record = wallet.latest()
    if record is None:
        raise CliError("wallet has no downloaded result")
    keys = read_keystore(wallet.keystore, allow_test_group=group.test_only)
    q = present(record.c, record.ot_id, keys, _now(args), args.window, _rng())
    text = wire.to_qr_text(q, group)
    if args.ascii_qr:
        _print_ascii_qr(text)
    out = {"written_to": args.out} if _write_text(args.out, text) else {"qr": text}
    out["bytes"] = len(wire.encode(q, group))
    return out


def holder_status(args) -> dict:
    group = _group(args)
    wallet = _load_wallet(args, group)
    records = []
    for r in wallet.records:
        entry = {"sess_id": wire.b64u_encode(r.sess_id) if r.sess_id else None,
                 "result": r.result.to_json() if r.result else None}
        if args.reveal:
            entry["ot_id"] = wire.b64u_encode(r.ot_id)
        records.append(entry)
    return {"keystore": wallet.keystore, "records": records}


def _print_ascii_qr(text: str) -> None:
    try:
        import qrcode  # optional, cosmetic only
    except ImportError:
        print("(install 'qrcode' for --ascii-qr)", file=sys.stderr)
        return
    qr = qrcode.QRCode(border=1)
    qr.add_data(text)
    qr.print_ascii(out=sys.stderr)


# -- site --------------------------------------------------------------------

def _site_store(args, group: GroupParams) -> SiteStore:
    return SiteStore(group, args.store or os.environ.get("HEALTHPASS_SITE_STORE") or "site.json")


def site_register_cmd(args) -> dict:
    group = _group(args)
    store = _site_store(args, group)
    try:
        sess_id = site_register(_read_text(args.payload), _rng(), store)
    except DecodeError as exc:
        raise CliError(f"bad registration payload: {exc}") from None
    return {"sess_id": wire.b64u_encode(sess_id)}


def site_upload(args) -> dict:
    group = _group(args)
    store = _site_store(args, group)
    sess_id = wire.b64u_decode(args.sess_id)
    ticket = store.by_sess_id(sess_id)
    if ticket is None:
        raise CliError("unknown session id at this site")
    issued = args.issued if args.issued is not None else _now(args)
    collected = args.collected if args.collected is not None else issued
    result = TestResult(Outcome(args.outcome), args.test_type, collected, issued)
    secret = wire.b64u_decode(_read_text(args.secret_file))
    _client(args, group).upload(secret, UploadRecord(sess_id, ticket.ot_id, ticket.holder_pk, result))
    return {"sess_id": args.sess_id, "uploaded": True}


# -- issuer ------------------------------------------------------------------

def issuer_keygen(args) -> dict:
    group = _group(args)
    keys = setup_issuer(group, _rng())
    write_keystore(args.keystore, keys)
    return {"keystore": args.keystore, "pk": wire.b64u_encode(keys.pk.to_bytes()),
            "group": group.name}


def issuer_export_pk(args) -> dict:
    group = _group(args)
    keys = read_keystore(args.keystore, allow_test_group=group.test_only)
    text = wire.b64u_encode(keys.pk.to_bytes())
    if _write_text(args.out, text):
        return {"written_to": args.out}
    return {"pk": text, "group": keys.group.name}


def issuer_add_site(args) -> dict:
    path = Path(args.sites)
    sites = json.loads(path.read_text()) if path.exists() else {}
    if args.site_id in sites:
        raise CliError(f"site {args.site_id!r} already configured")
    secret = secrets.token_bytes(32)
    sites[args.site_id] = wire.b64u_encode(secret)
    fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
    with os.fdopen(fd, "w") as fh:
        json.dump(sites, fh, indent=1)
    fd = os.open(args.secret_out, os.O_WRONLY | os.O_CREAT | os.O_EXCL, 0o600)
    with os.fdopen(fd, "w") as fh:
        fh.write(wire.b64u_encode(secret) + "\n")
    return {"site_id": args.site_id, "secret_written_to": args.secret_out}


def _open_service(args):
    config = load_config(args.config)
    allow = os.environ.get("HEALTHPASS_ALLOW_TEST_GROUP") == "1"
    group = get_group(config.group, allow_test=allow)
    keys = read_keystore(config.keystore, allow_test_group=allow)
    if keys.group != group:
        raise CliError("issuer keystore group does not match configuration")
    try:
        sites = load_sites(json.loads(Path(config.sites).read_text()))
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot load site credentials {config.sites}: {exc}") from None
    store = RecordStore(config.store, group)
    return config, RegistryService(keys, store, sites, _rng())


def issuer_serve(args) -> dict:
    config, service = _open_service(args)
    host, port = config.address
    server = make_server(service, host, port)
    print(f"serving on http://{server.server_address[0]}:{server.server_address[1]}",
          file=sys.stderr, flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
        service.store.close()
    return {"stopped": True}


def issuer_purge(args) -> dict:
    _, service = _open_service(args)
    removed = service.store.purge(args.older_than)
    return {"removed": removed, "remaining": len(service.store)}


# -- verifier --------------------------------------------------------------

def _policy(args) -> VerifierPolicy:
    return VerifierPolicy(
        max_result_age=args.max_age,
        accepted_outcomes=frozenset(Outcome(o) for o in args.accept),
        window=args.window,
        window_slack=args.slack,
        diagnostic_sweep=args.diagnostic_sweep,
    )


def verifier_verify(args) -> dict:
    group = _group(args)
    issuer_pk = _issuer_pk(args.issuer_pk, group)
    outcome = verify(_read_text(args.qr), issuer_pk, _now(args), _policy(args))
    out = {"accepted": outcome.accepted, "reason": outcome.reason.value}
    if not outcome.accepted:
        raise _Rejected(out)
    return out


def verifier_policy_show(args) -> dict:
    return _policy(args).to_json()


class _Rejected(Exception):
    def __init__(self, payload: dict) -> None:
        self.payload = payload


# -- parser ------------------------------------------------------------------

def _add_policy_args(p: argparse.ArgumentParser) -> None:
    defaults = VerifierPolicy()
    p.add_argument("--max-age", type=int, default=defaults.max_result_age)
    p.add_argument("--accept", action="append", choices=[o.value for o in Outcome],
                   default=None, help="accepted outcome (repeatable; default negative)")
    p.add_argument("--window", type=int, default=defaults.window)
    p.add_argument("--slack", type=int, default=defaults.window_slack)
    p.add_argument("--diagnostic-sweep", type=int, default=0)


def _add_common(p: argparse.ArgumentParser, defaults) -> None:
    kw = {} if defaults is not None else {"default": argparse.SUPPRESS}
    p.add_argument("--json", action="store_true", help="machine-readable output", **kw)
    p.add_argument("--reveal", action="store_true", help="include ot_id values in output", **kw)
    p.add_argument("--group", help="group name (default modp2048)", **kw)
    p.add_argument("-v", "--verbose", action="store_true", **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="healthpass")
    _add_common(parser, argparse.ArgumentParser().get_default)
    # subcommands accept the same flags; SUPPRESS keeps them from resetting top-level values
    common = argparse.ArgumentParser(add_help=False)
    _add_common(common, None)
    actors = parser.add_subparsers(dest="actor", required=True)

    holder = actors.add_parser("holder", parents=[common]).add_subparsers(dest="cmd", required=True)
    p = holder.add_parser("init", parents=[common])
    p.add_argument("--wallet")
    p.add_argument("--keystore")
    p.set_defaults(func=holder_init)
    p = holder.add_parser("register", parents=[common])
    p.add_argument("--wallet")
    p.add_argument("--out")
    p.set_defaults(func=holder_register)
    p = holder.add_parser("download", parents=[common])
    p.add_argument("--wallet")
    p.add_argument("--sess-id", required=True)
    p.add_argument("--server")
    p.add_argument("--issuer-pk", help="base64url key or file; default: ask the server")
    p.add_argument("--now", type=int)
    p.set_defaults(func=holder_download)
    p = holder.add_parser("present", parents=[common])
    p.add_argument("--wallet")
    p.add_argument("--out")
    p.add_argument("--now", type=int)
    p.add_argument("--window", type=int, default=VerifierPolicy().window)
    p.add_argument("--ascii-qr", action="store_true")
    p.set_defaults(func=holder_present)
    p = holder.add_parser("status", parents=[common])
    p.add_argument("--wallet")
    p.set_defaults(func=holder_status)

    site = actors.add_parser("site", parents=[common]).add_subparsers(dest="cmd", required=True)
    p = site.add_parser("register", parents=[common])
    p.add_argument("--store")
    p.add_argument("--payload", default="-", help="file with the holder's payload text, or -")
    p.set_defaults(func=site_register_cmd)
    p = site.add_parser("upload", parents=[common])
    p.add_argument("--store")
    p.add_argument("--server")
    p.add_argument("--sess-id", required=True)
    p.add_argument("--secret-file", required=True)
    p.add_argument("--outcome", required=True, choices=[o.value for o in Outcome])
    p.add_argument("--test-type", default="PCR")
    p.add_argument("--collected", type=int)
    p.add_argument("--issued", type=int)
    p.add_argument("--now", type=int)
    p.set_defaults(func=site_upload)

    issuer = actors.add_parser("issuer", parents=[common]).add_subparsers(dest="cmd", required=True)
    p = issuer.add_parser("keygen", parents=[common])
    p.add_argument("--keystore", default="issuer.key")
    p.set_defaults(func=issuer_keygen)
    p = issuer.add_parser("export-pk", parents=[common])
    p.add_argument("--keystore", default="issuer.key")
    p.add_argument("--out")
    p.set_defaults(func=issuer_export_pk)
    p = issuer.add_parser("add-site", parents=[common])
    p.add_argument("site_id")
    p.add_argument("--sites", default="sites.json")
    p.add_argument("--secret-out", required=True)
    p.set_defaults(func=issuer_add_site)
    p = issuer.add_parser("serve", parents=[common])
    p.add_argument("--config")
    p.set_defaults(func=issuer_serve)
    p = issuer.add_parser("purge", parents=[common])
    p.add_argument("--config")
    p.add_argument("--older-than", type=int, required=True, help="unix seconds")
    p.set_defaults(func=issuer_purge)

    verifier = actors.add_parser("verifier", parents=[common]).add_subparsers(dest="cmd", required=True)
    p = verifier.add_parser("verify", parents=[common])
    p.add_argument("--qr", default="-", help="file with QR text, or - for stdin")
    p.add_argument("--issuer-pk", required=True, help="base64url key or file")
    p.add_argument("--now", type=int)
    _add_policy_args(p)
    p.set_defaults(func=verifier_verify)
    p = verifier.add_parser("policy-show", parents=[common])
    _add_policy_args(p)
    p.set_defaults(func=verifier_policy_show)
    return parser


def _emit(args, payload: dict, line: str) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        print(line)


def _summary(payload: dict) -> str:
    if "reason" in payload:
        return f"{'ACCEPTED' if payload['accepted'] else 'REJECTED'} {payload['reason']}"
    for key in ("qr", "payload", "sess_id", "pk"):
        if key in payload:
            return str(payload[key])
    return " ".join(f"{k}={v}" for k, v in payload.items())


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "accept", "unset") is None:
        args.accept = [Outcome.NEGATIVE.value]
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        payload = args.func(args)
    except _Rejected as rej:
        _emit(args, rej.payload, _summary(rej.payload))
        return EXIT_REJECTED
    except CliError as exc:
        print(f"healthpass: {exc}", file=sys.stderr)
        return exc.code
    except (HealthPassError, OSError, ValueError) as exc:
        print(f"healthpass: {exc}", file=sys.stderr)
        return EXIT_IO
    _emit(args, payload, _summary(payload))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
