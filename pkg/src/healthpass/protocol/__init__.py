from healthpass.protocol.accounting import count_exponentiations
from healthpass.protocol.keystore import read_keystore, write_keystore
from healthpass.protocol.phases import (
    Reason,
    VerificationOutcome,
    VerifierPolicy,
    begin_registration,
    holder_accept_download,
    issue_result,
    open_result,
    present,
    result_key,
    setup_holder,
    setup_issuer,
    verify,
    window_element,
)
from healthpass.protocol.stores import SiteStore, WalletRecord, WalletState, site_register

__all__ = [
    "Reason", "SiteStore", "VerificationOutcome", "VerifierPolicy", "WalletRecord",
    "WalletState", "begin_registration", "count_exponentiations", "holder_accept_download",
    "issue_result", "open_result", "present", "read_keystore", "result_key", "setup_holder",
    "setup_issuer", "site_register", "verify", "window_element", "write_keystore",
]
