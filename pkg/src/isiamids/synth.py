"""Synthetic stand-ins for the NSL-KDD and CIDDS-001 CSV files.

The generators write files in the original raw layouts (NSL-KDD: 41 features,
label and a trailing difficulty column, no header; CIDDS-001: headed NetFlow
records with a possibly unit-suffixed byte column) with per-class row counts
equal to the published train/test splits.  Rows come from hand-written
per-attack-type archetypes.  Each type gets a seeded jitter, and the test split
adds types that never occur in training plus wider noise, so a model faces a
real distribution shift.

Nothing here is real traffic.  The files exercise the pipeline end to end at
full scale; accuracy figures measured on them say nothing about real data.
"""

from __future__ import annotations

import csv
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

# --------------------------------------------------------------------------
# NSL-KDD layout

NSL_TRAIN_COUNTS = {
    "normal": 67343,
    "neptune": 41214, "smurf": 2646, "back": 956, "teardrop": 892, "pod": 201, "land": 18,
    "satan": 3633, "ipsweep": 3599, "portsweep": 2931, "nmap": 1493,
    "warezclient": 890, "guess_passwd": 53, "warezmaster": 20, "imap": 11, "ftp_write": 8,
    "multihop": 7, "phf": 4, "spy": 2,
    "buffer_overflow": 30, "rootkit": 10, "loadmodule": 9, "perl": 3,
}

NSL_TEST_COUNTS = {
    "normal": 9711,
    "neptune": 4657, "apache2": 737, "processtable": 685, "smurf": 665, "back": 359,
    "mailbomb": 293, "pod": 41, "teardrop": 12, "land": 7, "udpstorm": 2,
    "mscan": 996, "satan": 735, "saint": 319, "portsweep": 157, "ipsweep": 141, "nmap": 73,
    "guess_passwd": 1231, "warezmaster": 944, "snmpguess": 331, "snmpgetattack": 178,
    "httptunnel": 133, "multihop": 18, "named": 17, "sendmail": 14, "xlock": 9, "xsnoop": 4,
    "ftp_write": 3, "worm": 2, "phf": 2, "imap": 1,
    "buffer_overflow": 20, "ps": 15, "rootkit": 13, "xterm": 13, "loadmodule": 2, "perl": 2,
    "sqlattack": 2,
}

RATES = (
    "serror_rate", "srv_serror_rate", "rerror_rate", "srv_rerror_rate", "same_srv_rate",
    "diff_srv_rate", "srv_diff_host_rate", "dst_host_same_srv_rate", "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate", "dst_host_srv_diff_host_rate", "dst_host_serror_rate",
    "dst_host_srv_serror_rate", "dst_host_rerror_rate", "dst_host_srv_rerror_rate",
)
SMALL_COUNTS = (
    "wrong_fragment", "urgent", "hot", "num_failed_logins", "num_compromised", "su_attempted",
    "num_root", "num_file_creations", "num_shells", "num_access_files",
)
FLAGS = ("land", "logged_in", "root_shell", "is_host_login", "is_guest_login")
SERVICES = (
    "http", "smtp", "ftp_data", "ftp", "domain_u", "private", "telnet", "ecr_i", "eco_i",
    "other", "finger", "auth", "pop_3", "imap4", "X11", "domain", "sunrpc", "urp_i", "ntp_u",
    "tim_i", "link", "systat", "netstat", "whois", "uucp", "csnet_ns", "ssh", "time", "IRC",
    "login", "mtp", "gopher", "echo", "discard", "daytime", "supdup", "iso_tsap", "ldap",
    "nnsp", "kshell", "klogin", "printer", "vmnet", "http_443", "courier", "ctf", "bgp",
    "name", "hostnames", "exec", "shell", "Z39_50", "efs", "nntp", "uucp_path", "sql_net",
    "netbios_ns", "netbios_dgm", "netbios_ssn", "remote_job", "rje", "pop_2", "pm_dump",
    "red_i", "tftp_u", "http_8001", "aol", "harvest", "http_2784",
)


@dataclass(frozen=True)
class Archetype:
    """Sampling recipe for one kind of connection record."""

    proto: dict
    services: dict
    flags: dict
    duration: tuple = (0.95, 2.0, 1.5)  # (P(zero), lognormal mu, sigma)
    src_bytes: tuple = (0.0, 5.5, 0.6)
    dst_bytes: tuple = (0.1, 7.5, 1.0)
    counts: dict = field(default_factory=dict)  # small integer feature -> Poisson mean
    binary: dict = field(default_factory=dict)  # 0/1 feature -> P(1)
    count: tuple = (5.0, 1.0)  # (median, log spread), connections in the window
    srv_count: tuple = (5.0, 1.0)
    dst_host_count: tuple = (200.0, 0.5)
    dst_host_srv_count: tuple = (150.0, 0.7)
    rates: dict = field(default_factory=dict)  # rate feature -> centre
    difficulty: tuple = (18, 21)


_CALM_RATES = {r: 0.0 for r in RATES} | {"same_srv_rate": 1.0, "dst_host_same_srv_rate": 0.9,
                                           "dst_host_same_src_port_rate": 0.05}

NORMAL_MIX = {
    "web": (0.42, Archetype({"tcp": 1}, {"http": 0.9, "http_443": 0.05, "http_8001": 0.05}, {"SF": 0.97, "RSTO": 0.03},
                            src_bytes=(0.0, 5.6, 0.5), dst_bytes=(0.02, 7.8, 1.1), binary={"logged_in": 0.98},
                            count=(6, 1.0), srv_count=(10, 1.0), dst_host_count=(180, 0.8), dst_host_srv_count=(240, 0.2),
                            rates=_CALM_RATES | {"srv_diff_host_rate": 0.1, "dst_host_srv_diff_host_rate": 0.03})),
    "mail": (0.08, Archetype({"tcp": 1}, {"smtp": 1}, {"SF": 0.95, "S1": 0.05}, duration=(0.8, 1.0, 1.0),
                             src_bytes=(0.0, 7.0, 0.9), dst_bytes=(0.0, 5.9, 0.4), binary={"logged_in": 0.99},
                             count=(1.5, 0.6), srv_count=(2, 0.8), dst_host_count=(120, 0.9), dst_host_srv_count=(100, 0.9),
                             rates=_CALM_RATES | {"dst_host_same_srv_rate": 0.5, "dst_host_diff_srv_rate": 0.05})),
    "ftp_data": (0.10, Archetype({"tcp": 1}, {"ftp_data": 1}, {"SF": 0.97, "S0": 0.03}, duration=(0.9, 1.5, 1.5),
                                 src_bytes=(0.1, 7.5, 2.0), dst_bytes=(0.85, 7.0, 2.0), binary={"logged_in": 0.9},
                                 count=(2, 0.8), srv_count=(3, 0.8), dst_host_count=(60, 1.2), dst_host_srv_count=(40, 1.2),
                                 rates=_CALM_RATES | {"dst_host_same_src_port_rate": 0.4})),
    "dns": (0.15, Archetype({"udp": 1}, {"domain_u": 0.9, "ntp_u": 0.1}, {"SF": 1}, duration=(1.0, 0, 1),
                            src_bytes=(0.0, 3.8, 0.3), dst_bytes=(0.0, 4.6, 0.5), count=(60, 1.0), srv_count=(60, 1.0),
                            dst_host_count=(255, 0.01), dst_host_srv_count=(250, 0.1),
                            rates=_CALM_RATES | {"dst_host_same_src_port_rate": 0.01})),
    "udp_private": (0.08, Archetype({"udp": 1}, {"private": 1}, {"SF": 1}, duration=(1.0, 0, 1),
                                    src_bytes=(0.0, 3.6, 0.4), dst_bytes=(0.0, 3.6, 0.5), count=(120, 1.0),
                                    srv_count=(120, 1.0), dst_host_count=(255, 0.01), dst_host_srv_count=(200, 0.4),
                                    rates=_CALM_RATES | {"dst_host_same_srv_rate": 0.8})),
    "icmp": (0.05, Archetype({"icmp": 1}, {"ecr_i": 0.6, "eco_i": 0.3, "urp_i": 0.1}, {"SF": 1}, duration=(1.0, 0, 1),
                             src_bytes=(0.0, 3.5, 1.2), dst_bytes=(1.0, 0, 1), count=(2, 0.8), srv_count=(3, 0.8),
                             dst_host_count=(40, 1.2), dst_host_srv_count=(40, 1.2),
                             rates=_CALM_RATES | {"dst_host_same_src_port_rate": 0.6, "srv_diff_host_rate": 0.3})),
    "interactive": (0.07, Archetype({"tcp": 1}, {"telnet": 0.3, "ftp": 0.3, "ssh": 0.1, "pop_3": 0.1, "imap4": 0.05,
                                                "finger": 0.1, "auth": 0.05}, {"SF": 0.9, "RSTO": 0.05, "S1": 0.05},
                                    duration=(0.5, 4.0, 1.8), src_bytes=(0.05, 5.0, 1.2), dst_bytes=(0.05, 6.5, 1.3),
                                    counts={"hot": 0.3, "num_access_files": 0.02}, binary={"logged_in": 0.9},
                                    count=(2, 0.8), srv_count=(2, 0.8), dst_host_count=(80, 1.0), dst_host_srv_count=(30, 1.2),
                                    rates=_CALM_RATES | {"dst_host_same_srv_rate": 0.4, "dst_host_diff_srv_rate": 0.05})),
    "misc": (0.05, Archetype({"tcp": 0.8, "udp": 0.2}, {s: 1 for s in SERVICES[9:40]}, {"SF": 0.85, "REJ": 0.1, "S0": 0.05},
                             duration=(0.85, 2.0, 2.0), src_bytes=(0.2, 4.5, 1.5), dst_bytes=(0.3, 5.5, 1.5),
                             count=(4, 1.2), srv_count=(4, 1.2), dst_host_count=(100, 1.0), dst_host_srv_count=(20, 1.2),
                             rates=_CALM_RATES | {"rerror_rate": 0.05, "same_srv_rate": 0.8, "dst_host_same_srv_rate": 0.2,
                                                  "dst_host_diff_srv_rate": 0.1})),
}

_FLOOD = {r: 0.0 for r in RATES} | {"serror_rate": 1.0, "srv_serror_rate": 1.0, "dst_host_serror_rate": 1.0,
                                     "dst_host_srv_serror_rate": 1.0, "same_srv_rate": 0.05, "diff_srv_rate": 0.06,
                                     "dst_host_same_srv_rate": 0.05, "dst_host_diff_srv_rate": 0.07}
_SCAN = {r: 0.0 for r in RATES} | {"rerror_rate": 0.6, "srv_rerror_rate": 0.6, "same_srv_rate": 0.2,
                                    "diff_srv_rate": 0.5, "dst_host_same_srv_rate": 0.05, "dst_host_diff_srv_rate": 0.6,
                                    "dst_host_rerror_rate": 0.5, "dst_host_srv_rerror_rate": 0.5}
_ICMP_BURST = {r: 0.0 for r in RATES} | {"same_srv_rate": 1.0, "dst_host_same_srv_rate": 1.0,
                                          "dst_host_same_src_port_rate": 1.0}
_LOGIN = _CALM_RATES | {"dst_host_same_srv_rate": 0.3, "dst_host_diff_srv_rate": 0.05,
                        "dst_host_same_src_port_rate": 0.1}

_TCP_ANY = {"tcp": 1}
_MANY = {s: 1 for s in SERVICES}

ATTACKS = {
    # DoS
    "neptune": Archetype(_TCP_ANY, _MANY | {"private": 40}, {"S0": 0.8, "REJ": 0.18, "RSTO": 0.02},
                         duration=(1.0, 0, 1), src_bytes=(1.0, 0, 1), dst_bytes=(1.0, 0, 1),
                         count=(180, 0.5), srv_count=(12, 0.8), dst_host_count=(255, 0.01), dst_host_srv_count=(15, 0.8),
                         rates=_FLOOD, difficulty=(19, 21)),
    "smurf": Archetype({"icmp": 1}, {"ecr_i": 1}, {"SF": 1}, duration=(1.0, 0, 1), src_bytes=(0.0, 6.9, 0.3),
                       dst_bytes=(1.0, 0, 1), count=(480, 0.1), srv_count=(480, 0.1), dst_host_count=(255, 0.01),
                       dst_host_srv_count=(255, 0.01), rates=_ICMP_BURST),
    "back": Archetype(_TCP_ANY, {"http": 1}, {"SF": 0.9, "RSTR": 0.1}, duration=(0.95, 1, 1),
                      src_bytes=(0.0, 10.9, 0.05), dst_bytes=(0.05, 9.0, 0.3), counts={"hot": 2.0, "num_compromised": 1.0},
                      binary={"logged_in": 1.0}, count=(8, 0.8), srv_count=(8, 0.8), dst_host_count=(200, 0.5),
                      dst_host_srv_count=(200, 0.5), rates=_CALM_RATES),
    "teardrop": Archetype({"udp": 1}, {"private": 1}, {"SF": 1}, duration=(1.0, 0, 1), src_bytes=(0.0, 3.33, 0.01),
                          dst_bytes=(1.0, 0, 1), counts={"wrong_fragment": 3.0}, count=(80, 0.8), srv_count=(80, 0.8),
                          dst_host_count=(255, 0.01), dst_host_srv_count=(60, 0.8), rates=_ICMP_BURST),
    "pod": Archetype({"icmp": 1}, {"ecr_i": 0.7, "tim_i": 0.3}, {"SF": 1}, duration=(1.0, 0, 1),
                     src_bytes=(0.0, 7.3, 0.02), dst_bytes=(1.0, 0, 1), counts={"wrong_fragment": 1.0},
                     count=(3, 0.6), srv_count=(3, 0.6), dst_host_count=(80, 1.0), dst_host_srv_count=(80, 1.0),
                     rates=_ICMP_BURST),
    "land": Archetype(_TCP_ANY, {"finger": 0.3, "telnet": 0.3, "http": 0.4}, {"S0": 1}, duration=(1.0, 0, 1),
                      src_bytes=(1.0, 0, 1), dst_bytes=(1.0, 0, 1), binary={"land": 1.0}, count=(1, 0.1), srv_count=(1, 0.1),
                      dst_host_count=(100, 1.0), dst_host_srv_count=(5, 0.5), rates=_FLOOD | {"same_srv_rate": 1.0}),
    "apache2": Archetype(_TCP_ANY, {"http": 1}, {"SF": 0.5, "RSTR": 0.3, "S3": 0.2}, duration=(0.9, 2, 1),
                         src_bytes=(0.3, 6.2, 1.0), dst_bytes=(0.7, 5.0, 1.5), counts={"hot": 0.5},
                         binary={"logged_in": 0.6}, count=(90, 0.6), srv_count=(90, 0.6), dst_host_count=(255, 0.01),
                         dst_host_srv_count=(255, 0.05), rates=_CALM_RATES | {"rerror_rate": 0.3, "srv_rerror_rate": 0.3,
                                                                             "dst_host_rerror_rate": 0.3}),
    "processtable": Archetype(_TCP_ANY, _MANY, {"SF": 0.7, "S1": 0.2, "RSTO": 0.1}, duration=(0.05, 6.0, 0.6),
                              src_bytes=(0.9, 2, 1), dst_bytes=(0.9, 2, 1), count=(3, 0.8), srv_count=(3, 0.8),
                              dst_host_count=(255, 0.01), dst_host_srv_count=(20, 1.0),
                              rates=_CALM_RATES | {"dst_host_same_srv_rate": 0.08, "dst_host_diff_srv_rate": 0.07}),
    "mailbomb": Archetype(_TCP_ANY, {"smtp": 1}, {"SF": 1}, duration=(1.0, 0, 1), src_bytes=(0.0, 6.85, 0.03),
                          dst_bytes=(0.0, 5.8, 0.1), binary={"logged_in": 1.0}, count=(200, 0.4), srv_count=(200, 0.4),
                          dst_host_count=(255, 0.01), dst_host_srv_count=(255, 0.01),
                          rates=_CALM_RATES | {"dst_host_same_srv_rate": 1.0, "dst_host_same_src_port_rate": 0.0}),
    "udpstorm": Archetype({"udp": 1}, {"private": 1}, {"SF": 1}, duration=(1.0, 0, 1), src_bytes=(0.0, 6.9, 0.01),
                          dst_bytes=(1.0, 0, 1), count=(500, 0.05), srv_count=(500, 0.05), dst_host_count=(255, 0.01),
                          dst_host_srv_count=(255, 0.01), rates=_ICMP_BURST),
    # Probe
    "satan": Archetype({"tcp": 0.9, "udp": 0.05, "icmp": 0.05}, _MANY, {"REJ": 0.5, "S0": 0.15, "RSTO": 0.15, "SF": 0.2},
                       duration=(0.99, 1, 1), src_bytes=(0.8, 2.5, 1.0), dst_bytes=(0.9, 3.5, 1.2),
                       count=(120, 1.0), srv_count=(2, 0.5), dst_host_count=(255, 0.05), dst_host_srv_count=(5, 0.8),
                       rates=_SCAN),
    "ipsweep": Archetype({"icmp": 0.95, "tcp": 0.05}, {"eco_i": 0.9, "ecr_i": 0.1}, {"SF": 1}, duration=(1.0, 0, 1),
                         src_bytes=(0.0, 2.5, 0.4), dst_bytes=(1.0, 0, 1), count=(1, 0.3), srv_count=(20, 1.0),
                         dst_host_count=(5, 1.0), dst_host_srv_count=(60, 1.0),
                         rates={r: 0.0 for r in RATES} | {"same_srv_rate": 1.0, "srv_diff_host_rate": 1.0,
                                                          "dst_host_same_srv_rate": 1.0, "dst_host_same_src_port_rate": 1.0,
                                                          "dst_host_srv_diff_host_rate": 0.6}),
    "portsweep": Archetype(_TCP_ANY, {"private": 0.8} | {s: 0.01 for s in SERVICES}, {"RSTR": 0.6, "REJ": 0.3, "RSTOS0": 0.1},
                           duration=(0.8, 7.0, 2.0), src_bytes=(0.95, 2, 1), dst_bytes=(0.99, 2, 1),
                           count=(1, 0.3), srv_count=(1, 0.5), dst_host_count=(1, 1.0), dst_host_srv_count=(1, 1.0),
                           rates={r: 0.0 for r in RATES} | {"rerror_rate": 0.9, "srv_rerror_rate": 0.9, "same_srv_rate": 1.0,
                                                            "dst_host_same_srv_rate": 0.5, "dst_host_diff_srv_rate": 0.5,
                                                            "dst_host_same_src_port_rate": 1.0, "dst_host_rerror_rate": 0.9,
                                                            "dst_host_srv_rerror_rate": 0.9}),
    "nmap": Archetype({"tcp": 0.4, "icmp": 0.4, "udp": 0.2}, _MANY, {"SF": 0.5, "S0": 0.3, "REJ": 0.1, "RSTR": 0.1},
                      duration=(1.0, 0, 1), src_bytes=(0.6, 2.0, 1.0), dst_bytes=(0.99, 2, 1), count=(1, 0.4), srv_count=(1, 0.4),
                      dst_host_count=(20, 1.5), dst_host_srv_count=(2, 1.0),
                      rates={r: 0.0 for r in RATES} | {"same_srv_rate": 1.0, "dst_host_same_srv_rate": 0.1,
                                                       "dst_host_diff_srv_rate": 0.6, "dst_host_same_src_port_rate": 0.8,
                                                       "dst_host_serror_rate": 0.2}),
    "mscan": Archetype({"tcp": 0.9, "udp": 0.1}, _MANY, {"SF": 0.3, "REJ": 0.3, "S0": 0.3, "RSTO": 0.1},
                       duration=(0.99, 1, 1), src_bytes=(0.7, 3.5, 1.0), dst_bytes=(0.8, 4.0, 1.2),
                       count=(8, 1.0), srv_count=(3, 1.0), dst_host_count=(255, 0.05), dst_host_srv_count=(3, 0.8),
                       rates=_SCAN | {"dst_host_same_src_port_rate": 0.05, "serror_rate": 0.3, "dst_host_serror_rate": 0.3}),
    "saint": Archetype({"tcp": 0.85, "udp": 0.1, "icmp": 0.05}, _MANY, {"REJ": 0.6, "SF": 0.2, "S0": 0.2},
                       duration=(0.99, 1, 1), src_bytes=(0.8, 2.5, 1.0), dst_bytes=(0.9, 3.0, 1.0),
                       count=(80, 1.0), srv_count=(2, 0.5), dst_host_count=(255, 0.05), dst_host_srv_count=(5, 0.8),
                       rates=_SCAN | {"dst_host_rerror_rate": 0.7}),
    # R2L
    "warezclient": Archetype(_TCP_ANY, {"ftp_data": 0.6, "ftp": 0.4}, {"SF": 1}, duration=(0.3, 6.0, 1.5),
                             src_bytes=(0.05, 9.5, 1.2), dst_bytes=(0.8, 3, 1), counts={"hot": 8.0, "num_access_files": 0.1},
                             binary={"logged_in": 1.0, "is_guest_login": 0.7}, count=(1, 0.3), srv_count=(1, 0.3),
                             dst_host_count=(40, 1.0), dst_host_srv_count=(10, 1.0), rates=_LOGIN, difficulty=(11, 19)),
    "guess_passwd": Archetype(_TCP_ANY, {"telnet": 0.9, "pop_3": 0.05, "imap4": 0.05}, {"RSTO": 0.6, "SF": 0.3, "S3": 0.1},
                              duration=(0.6, 1.0, 1.0), src_bytes=(0.0, 4.85, 0.2), dst_bytes=(0.0, 5.1, 0.3),
                              counts={"num_failed_logins": 1.0, "hot": 0.2}, count=(1, 0.3), srv_count=(1, 0.3),
                              dst_host_count=(60, 1.2), dst_host_srv_count=(60, 1.2), rates=_LOGIN, difficulty=(8, 16)),
    "warezmaster": Archetype(_TCP_ANY, {"ftp": 0.8, "ftp_data": 0.2}, {"SF": 1}, duration=(0.1, 7.0, 1.5),
                             src_bytes=(0.0, 6.0, 1.5), dst_bytes=(0.0, 13.0, 1.5), counts={"hot": 15.0},
                             binary={"logged_in": 1.0, "is_guest_login": 0.6}, count=(1, 0.2), srv_count=(1, 0.2),
                             dst_host_count=(5, 1.0), dst_host_srv_count=(20, 1.0), rates=_LOGIN, difficulty=(7, 15)),
    "imap": Archetype(_TCP_ANY, {"imap4": 1}, {"SH": 0.5, "S0": 0.3, "SF": 0.2}, duration=(0.9, 3, 1),
                      src_bytes=(0.3, 7.2, 0.5), dst_bytes=(0.5, 6, 1), count=(2, 0.8), srv_count=(2, 0.8),
                      dst_host_count=(10, 1.0), dst_host_srv_count=(10, 1.0), rates=_LOGIN | {"serror_rate": 0.5}),
    "ftp_write": Archetype(_TCP_ANY, {"ftp": 0.5, "ftp_data": 0.5}, {"SF": 1}, duration=(0.5, 3, 1),
                           src_bytes=(0.0, 6.0, 1.0), dst_bytes=(0.3, 7.0, 1.0),
                           counts={"hot": 3.0, "num_file_creations": 1.0}, binary={"logged_in": 1.0},
                           count=(1, 0.2), srv_count=(1, 0.2), dst_host_count=(5, 1.0), dst_host_srv_count=(5, 1.0), rates=_LOGIN),
    "multihop": Archetype(_TCP_ANY, {"telnet": 0.6, "ftp_data": 0.4}, {"SF": 1}, duration=(0.1, 6.5, 1.0),
                          src_bytes=(0.0, 7.0, 1.0), dst_bytes=(0.0, 8.5, 1.0),
                          counts={"hot": 4.0, "num_file_creations": 1.0, "num_compromised": 1.0},
                          binary={"logged_in": 1.0}, count=(1, 0.2), srv_count=(1, 0.2),
                          dst_host_count=(3, 0.8), dst_host_srv_count=(3, 0.8), rates=_LOGIN),
    "phf": Archetype(_TCP_ANY, {"http": 1}, {"SF": 1}, duration=(0.5, 1, 1), src_bytes=(0.0, 6.2, 0.1),
                     dst_bytes=(0.0, 7.3, 0.2), counts={"hot": 2.0}, binary={"logged_in": 1.0},
                     count=(1, 0.2), srv_count=(1, 0.2), dst_host_count=(5, 1.0), dst_host_srv_count=(5, 1.0), rates=_LOGIN),
    "spy": Archetype(_TCP_ANY, {"telnet": 1}, {"SF": 1}, duration=(0.0, 9.5, 0.3), src_bytes=(0.0, 7.5, 0.3),
                     dst_bytes=(0.0, 10.0, 0.5), counts={"hot": 10.0, "num_file_creations": 3.0, "num_access_files": 1.0},
                     binary={"logged_in": 1.0}, count=(1, 0.1), srv_count=(1, 0.1),
                     dst_host_count=(1, 0.2), dst_host_srv_count=(1, 0.2), rates=_LOGIN),
    "snmpguess": Archetype({"udp": 1}, {"private": 1}, {"SF": 1}, duration=(1.0, 0, 1), src_bytes=(0.0, 3.5, 0.1),
                           dst_bytes=(1.0, 0, 1), count=(200, 0.8), srv_count=(200, 0.8), dst_host_count=(255, 0.01),
                           dst_host_srv_count=(240, 0.2), rates=_CALM_RATES | {"dst_host_same_srv_rate": 0.95},
                           difficulty=(3, 12)),
    "snmpgetattack": replace(NORMAL_MIX["udp_private"][1], difficulty=(1, 8)),
    "httptunnel": Archetype(_TCP_ANY, {"http": 0.5, "ftp_data": 0.3, "other": 0.2}, {"SF": 0.8, "RSTO": 0.2},
                            duration=(0.2, 6.0, 1.5), src_bytes=(0.1, 5.5, 1.5), dst_bytes=(0.3, 6.0, 1.5),
                            counts={"hot": 1.0}, binary={"logged_in": 0.9}, count=(2, 0.6), srv_count=(2, 0.6),
                            dst_host_count=(20, 1.0), dst_host_srv_count=(10, 1.0), rates=_LOGIN),
    "named": Archetype(_TCP_ANY, {"domain": 1}, {"SF": 1}, duration=(0.5, 3, 1), src_bytes=(0.0, 7.5, 0.5),
                       dst_bytes=(0.0, 6.0, 0.5), counts={"hot": 1.0, "num_compromised": 0.5}, binary={"logged_in": 0.8},
                       count=(1, 0.3), srv_count=(1, 0.3), dst_host_count=(5, 1.0), dst_host_srv_count=(5, 1.0), rates=_LOGIN),
    "sendmail": Archetype(_TCP_ANY, {"smtp": 1}, {"SF": 1}, duration=(0.5, 2, 1), src_bytes=(0.0, 8.0, 0.5),
                          dst_bytes=(0.0, 6.0, 0.3), counts={"hot": 1.0}, binary={"logged_in": 1.0},
                          count=(1, 0.2), srv_count=(1, 0.2), dst_host_count=(10, 1.0), dst_host_srv_count=(10, 1.0), rates=_LOGIN),
    "xlock": Archetype(_TCP_ANY, {"X11": 1}, {"SF": 1}, duration=(0.0, 4.0, 1.0), src_bytes=(0.0, 5.0, 0.5),
                       dst_bytes=(0.0, 6.5, 0.5), binary={"logged_in": 1.0}, count=(1, 0.2), srv_count=(1, 0.2),
                       dst_host_count=(3, 0.5), dst_host_srv_count=(3, 0.5), rates=_LOGIN),
    "xsnoop": Archetype(_TCP_ANY, {"X11": 1}, {"SF": 0.5, "S0": 0.5}, duration=(0.5, 3.0, 1.0), src_bytes=(0.3, 4.0, 1.0),
                        dst_bytes=(0.3, 4.0, 1.0), count=(1, 0.2), srv_count=(1, 0.2),
                        dst_host_count=(3, 0.5), dst_host_srv_count=(3, 0.5), rates=_LOGIN),
    "worm": Archetype(_TCP_ANY, {"http": 0.5, "smtp": 0.5}, {"SF": 1}, duration=(0.5, 2, 1), src_bytes=(0.0, 8.5, 0.2),
                      dst_bytes=(0.0, 6.0, 0.5), counts={"hot": 2.0}, binary={"logged_in": 1.0},
                      count=(20, 0.5), srv_count=(20, 0.5), dst_host_count=(255, 0.01), dst_host_srv_count=(255, 0.01),
                      rates=_CALM_RATES),
    # U2R
    "buffer_overflow": Archetype(_TCP_ANY, {"telnet": 0.7, "ftp_data": 0.3}, {"SF": 1}, duration=(0.1, 5.0, 1.2),
                                 src_bytes=(0.0, 7.0, 1.0), dst_bytes=(0.0, 8.0, 1.2),
                                 counts={"hot": 2.0, "num_file_creations": 1.0, "num_shells": 0.4, "num_root": 1.0,
                                         "num_compromised": 1.0},
                                 binary={"logged_in": 1.0, "root_shell": 0.7}, count=(1, 0.2), srv_count=(1, 0.2),
                                 dst_host_count=(10, 1.0), dst_host_srv_count=(10, 1.0), rates=_LOGIN, difficulty=(6, 16)),
    "rootkit": Archetype(_TCP_ANY, {"telnet": 0.6, "ftp_data": 0.2, "private": 0.2}, {"SF": 1}, duration=(0.2, 5.0, 1.5),
                         src_bytes=(0.1, 6.5, 1.5), dst_bytes=(0.2, 7.0, 1.5),
                         counts={"hot": 1.0, "num_file_creations": 0.5, "num_root": 0.5},
                         binary={"logged_in": 0.9, "root_shell": 0.3}, count=(1, 0.3), srv_count=(1, 0.3),
                         dst_host_count=(20, 1.2), dst_host_srv_count=(10, 1.2), rates=_LOGIN),
    "loadmodule": Archetype(_TCP_ANY, {"telnet": 0.8, "ftp_data": 0.2}, {"SF": 1}, duration=(0.1, 5.5, 1.0),
                            src_bytes=(0.0, 6.5, 1.0), dst_bytes=(0.0, 8.0, 1.0),
                            counts={"hot": 1.0, "num_file_creations": 1.0, "num_shells": 0.3},
                            binary={"logged_in": 1.0, "root_shell": 0.5}, count=(1, 0.2), srv_count=(1, 0.2),
                            dst_host_count=(5, 1.0), dst_host_srv_count=(5, 1.0), rates=_LOGIN),
    "perl": Archetype(_TCP_ANY, {"telnet": 1}, {"SF": 1}, duration=(0.1, 5.0, 0.8), src_bytes=(0.0, 6.8, 0.5),
                      dst_bytes=(0.0, 7.5, 0.5), counts={"hot": 1.0, "num_root": 2.0, "num_file_creations": 1.0},
                      binary={"logged_in": 1.0, "root_shell": 1.0}, count=(1, 0.2), srv_count=(1, 0.2),
                      dst_host_count=(3, 0.8), dst_host_srv_count=(3, 0.8), rates=_LOGIN),
    "ps": Archetype(_TCP_ANY, {"telnet": 1}, {"SF": 1}, duration=(0.1, 5.5, 1.0), src_bytes=(0.0, 6.5, 0.8),
                    dst_bytes=(0.0, 7.8, 0.8), counts={"hot": 1.0, "num_root": 1.0, "num_file_creations": 0.5},
                    binary={"logged_in": 1.0, "root_shell": 0.8}, count=(1, 0.2), srv_count=(1, 0.2),
                    dst_host_count=(5, 1.0), dst_host_srv_count=(5, 1.0), rates=_LOGIN),
    "xterm": Archetype(_TCP_ANY, {"telnet": 1}, {"SF": 1}, duration=(0.1, 5.5, 1.0), src_bytes=(0.0, 6.8, 0.8),
                       dst_bytes=(0.0, 8.0, 0.8), counts={"hot": 2.0, "num_root": 1.0, "num_shells": 0.5},
                       binary={"logged_in": 1.0, "root_shell": 0.9}, count=(1, 0.2), srv_count=(1, 0.2),
                       dst_host_count=(5, 1.0), dst_host_srv_count=(5, 1.0), rates=_LOGIN),
    "sqlattack": Archetype(_TCP_ANY, {"telnet": 1}, {"SF": 1}, duration=(0.1, 5.0, 1.0), src_bytes=(0.0, 6.0, 0.8),
                           dst_bytes=(0.0, 7.0, 0.8), counts={"hot": 1.0, "num_root": 0.5},
                           binary={"logged_in": 1.0, "root_shell": 0.6}, count=(1, 0.2), srv_count=(1, 0.2),
                           dst_host_count=(5, 1.0), dst_host_srv_count=(5, 1.0), rates=_LOGIN),
}


def _type_seed(seed: int, name: str, split: str) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(name.encode()), zlib.crc32(split.encode())])


def _jitter(arch: Archetype, rng: np.random.Generator, scale: float) -> Archetype:
    """Nudge an archetype's numeric centres; ``scale`` sets how far."""
    shift = lambda c: float(np.clip(c + rng.normal(0, 0.08 * scale), 0.0, 1.0))
    rates = {r: shift(arch.rates.get(r, 0.0)) if 0.0 < arch.rates.get(r, 0.0) < 1.0 else arch.rates.get(r, 0.0)
             for r in RATES}
    mu = lambda t: (t[0], t[1] + rng.normal(0, 0.3 * scale), t[2] * np.exp(rng.normal(0, 0.2 * scale)))
    return replace(arch, rates=rates, src_bytes=mu(arch.src_bytes), dst_bytes=mu(arch.dst_bytes))


def _choice(rng, table: dict, n: int) -> np.ndarray:
    keys = list(table)
    p = np.array([table[k] for k in keys], dtype=np.float64)
    return np.array(keys, dtype=object)[rng.choice(len(keys), size=n, p=p / p.sum())]


def _lognormal_int(rng, spec: tuple, n: int) -> np.ndarray:
    p_zero, mu, sigma = spec
    v = np.rint(np.exp(rng.normal(mu, sigma, n))).astype(np.int64)
    v[rng.random(n) < p_zero] = 0
    return v


def _window(rng, spec: tuple, n: int, cap: int) -> np.ndarray:
    median, spread = spec
    return np.clip(np.rint(median * np.exp(rng.normal(0, spread, n))), 0, cap).astype(np.int64)


def _sample_nsl(arch: Archetype, n: int, rng: np.random.Generator, noise: float) -> dict[str, np.ndarray]:
    cols: dict[str, np.ndarray] = {}
    cols["duration"] = _lognormal_int(rng, arch.duration, n)
    cols["protocol_type"] = _choice(rng, arch.proto, n)
    cols["service"] = _choice(rng, arch.services, n)
    cols["flag"] = _choice(rng, arch.flags, n)
    cols["src_bytes"] = _lognormal_int(rng, arch.src_bytes, n)
    cols["dst_bytes"] = _lognormal_int(rng, arch.dst_bytes, n)
    for f in FLAGS:
        cols[f] = (rng.random(n) < arch.binary.get(f, 0.0)).astype(np.int64)
    for f in SMALL_COUNTS:
        cols[f] = rng.poisson(arch.counts.get(f, 0.0), n)
    cols["su_attempted"] = np.minimum(cols["su_attempted"], 2)
    cols["num_outbound_cmds"] = np.zeros(n, np.int64)
    cols["count"] = _window(rng, arch.count, n, 511)
    cols["srv_count"] = _window(rng, arch.srv_count, n, 511)
    cols["dst_host_count"] = _window(rng, arch.dst_host_count, n, 255)
    cols["dst_host_srv_count"] = _window(rng, arch.dst_host_srv_count, n, 255)
    for r in RATES:
        c = arch.rates.get(r, 0.0)
        v = np.clip(c + rng.normal(0, noise, n), 0.0, 1.0)
        # most real rates sit exactly at 0 or 1
        snap = rng.random(n) < 0.6
        v = np.where(snap & (c <= 0.02), 0.0, np.where(snap & (c >= 0.98), 1.0, v))
        cols[r] = np.round(v, 2)
    lo, hi = arch.difficulty
    cols["difficulty"] = rng.integers(lo, hi + 1, n)
    return cols


def _as_text(values: np.ndarray) -> np.ndarray:
    if values.dtype.kind == "f":
        return np.char.mod("%.2f", values)
    return values.astype(str)


def nslkdd_rows(split: str, seed: int = 0, counts: dict | None = None) -> list[list[str]]:
    """Rows for the ``"train"`` or ``"test"`` split, shuffled."""
    from .dataio import NSLKDD_COLUMNS

    if split not in ("train", "test"):
        raise ValueError("split must be 'train' or 'test'")
    counts = counts or (NSL_TRAIN_COUNTS if split == "train" else NSL_TEST_COUNTS)
    noise = 0.06 if split == "train" else 0.10
    features = NSLKDD_COLUMNS[:-1]
    blocks = []
    for name, n in counts.items():
        if n == 0:
            continue
        if name == "normal":
            mix = list(NORMAL_MIX.values())
            weights = np.array([w for w, _ in mix])
            sizes = np.random.default_rng([seed, 7, zlib.crc32(split.encode())]).multinomial(n, weights / weights.sum())
            parts = [(a, k) for (_, a), k in zip(mix, sizes) if k]
        else:
            parts = [(ATTACKS[name], n)]
        trng = _type_seed(seed, name, split)
        # test-only types drift further from any training archetype
        scale = 1.0 if name in NSL_TRAIN_COUNTS else 2.0
        if split == "test":
            scale += 0.5
        for i, (arch, k) in enumerate(parts):
            arch = _jitter(arch, trng, scale) if name != "normal" else _jitter(arch, trng, 0.3 if split == "test" else 0.0)
            cols = _sample_nsl(arch, k, trng, noise)
            text = [_as_text(cols[f]) for f in features] + [np.full(k, name), _as_text(cols["difficulty"])]
            blocks.extend(map(list, zip(*text)))
    order = np.random.default_rng([seed, 99, zlib.crc32(split.encode())]).permutation(len(blocks))
    return [blocks[i] for i in order]


# --------------------------------------------------------------------------
# CIDDS-001 layout

CIDDS_TRAIN_COUNTS = {"---": 53000, "dos": 36000, "portScan": 9117, "pingScan": 500, "bruteForce": 1055}
CIDDS_TEST_COUNTS = {"---": 15000, "dos": 6604, "portScan": 3250, "pingScan": 765, "bruteForce": 803}

_INTERNAL = [f"192.168.{net}.{host}" for net in (100, 200, 210, 220) for host in range(1, 30)]
_EXTERNAL = ["EXT_SERVER", "OPENSTACK_NET", "ATTACKER1", "ATTACKER2", "ATTACKER3", "DNS"]


@dataclass(frozen=True)
class FlowArchetype:
    proto: dict
    dst_ports: dict  # port -> weight; -1 means a random high port
    flags: dict
    packets: tuple  # (lognormal mu, sigma)
    bytes_per_packet: tuple  # (mu, sigma)
    duration: tuple  # (P(zero), mu, sigma)
    src_pool: tuple
    dst_pool: tuple
    cls: str
    tos: dict = field(default_factory=lambda: {0: 1})


FLOWS = {
    "---": FlowArchetype({"TCP": 0.8, "UDP": 0.18, "ICMP": 0.02}, {80: 4, 443: 3, 53: 2, 22: 1, 25: 1, -1: 4},
                         {".AP.SF": 0.5, ".AP...": 0.25, ".A....": 0.15, "...S.": 0.05, ".A..S.": 0.05},
                         (1.5, 1.2), (5.5, 0.8), (0.3, -1.0, 2.0), ("int", "ext"), ("int", "ext"), "normal",
                         {0: 0.9, 32: 0.1}),
    "dos": FlowArchetype({"TCP": 0.9, "UDP": 0.1}, {80: 10, -1: 1}, {"....S.": 0.6, ".A..S.": 0.2, ".AP.S.": 0.2},
                         (0.2, 0.4), (4.0, 0.1), (0.9, -3.0, 1.0), ("atk",), ("int",), "attacker"),
    "portScan": FlowArchetype({"TCP": 1.0}, {-1: 1}, {"....S.": 0.5, ".A.R..": 0.3, ".A.RS.": 0.2},
                              (0.0, 0.3), (3.8, 0.1), (0.95, -4.0, 1.0), ("atk",), ("int",), "attacker"),
    "pingScan": FlowArchetype({"ICMP": 1.0}, {0: 1}, {"......": 1.0}, (0.0, 0.2), (3.3, 0.05), (1.0, 0.0, 1.0),
                              ("atk",), ("int",), "attacker"),
    "bruteForce": FlowArchetype({"TCP": 1.0}, {22: 1}, {".AP.SF": 0.7, ".AP.S.": 0.3}, (3.0, 0.3), (4.7, 0.2),
                                (0.1, 1.0, 0.5), ("atk",), ("int",), "attacker"),
}


def _pool(kind: str):
    return {"int": _INTERNAL, "ext": _EXTERNAL[:2] + _EXTERNAL[5:], "atk": _EXTERNAL[2:5] + _INTERNAL[:3]}[kind]


def _suffixed(v: int) -> str:
    """CIDDS-style byte cell: large values abbreviated with a unit suffix."""
    return f"{v / 1e6:.1f} M" if v >= 1_000_000 else str(v)


def cidds_rows(split: str, seed: int = 0, counts: dict | None = None) -> list[list[str]]:
    from .dataio import CIDDS_COLUMNS

    if split not in ("train", "test"):
        raise ValueError("split must be 'train' or 'test'")
    counts = counts or (CIDDS_TRAIN_COUNTS if split == "train" else CIDDS_TEST_COUNTS)
    day = 15 if split == "train" else 22
    width = len(CIDDS_COLUMNS)
    rows = []
    for label, n in counts.items():
        a = FLOWS[label]
        rng = _type_seed(seed, label, "cidds-" + split)
        shift = 0.0 if split == "train" else 0.15
        proto = _choice(rng, a.proto, n)
        ports = _choice(rng, a.dst_ports, n).astype(np.int64)
        ports = np.where(ports < 0, rng.integers(1024, 65536, n), ports)
        if label == "portScan":
            ports = rng.integers(1, 1025, n)
        packets = np.maximum(1, np.rint(np.exp(rng.normal(a.packets[0] + shift, a.packets[1], n)))).astype(np.int64)
        nbytes = np.rint(packets * np.exp(rng.normal(a.bytes_per_packet[0], a.bytes_per_packet[1], n))).astype(np.int64)
        dur = np.exp(rng.normal(a.duration[1], a.duration[2], n))
        dur[rng.random(n) < a.duration[0]] = 0.0
        src_pool = sum((_pool(k) for k in a.src_pool), [])
        dst_pool = sum((_pool(k) for k in a.dst_pool), [])
        src = np.array(src_pool, dtype=object)[rng.integers(0, len(src_pool), n)]
        dst = np.array(dst_pool, dtype=object)[rng.integers(0, len(dst_pool), n)]
        flags = _choice(rng, a.flags, n)
        tos = _choice(rng, a.tos, n)
        seconds = np.sort(rng.integers(0, 86400, n))
        for j in range(n):
            s = int(seconds[j])
            stamp = f"2017-03-{day} {s // 3600:02d}:{s % 3600 // 60:02d}:{s % 60:02d}.{int(rng.integers(0, 1000)):03d}"
            src_pt = int(rng.integers(1024, 65536)) if proto[j] != "ICMP" else 0
            dst_pt = int(ports[j]) if proto[j] != "ICMP" else 0
            row = [stamp, f"{dur[j]:.3f}", str(proto[j]), str(src[j]), str(src_pt), str(dst[j]), str(dst_pt),
                   str(packets[j]), _suffixed(int(nbytes[j])), "1", str(flags[j]), str(tos[j]),
                   a.cls, label, "---" if label == "---" else str(1 + zlib.crc32(label.encode()) % 70),
                   "---" if label == "---" else f"{label} run"]
            assert len(row) == width
            rows.append(row)
    order = np.random.default_rng([seed, 98, zlib.crc32(split.encode())]).permutation(len(rows))
    return [rows[i] for i in order]


def write_rows(path, rows, header=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow(header)
        w.writerows(rows)
    return path


def write_dataset(name: str, out_dir, seed: int = 0, scale: float = 1.0) -> tuple[Path, Path]:
    """Write ``<name>_train.csv`` and ``<name>_test.csv``; ``scale`` < 1 shrinks
    every class proportionally (at least one row each)."""
    from .dataio import CIDDS_COLUMNS

    out_dir = Path(out_dir)
    paths = []
    for split in ("train", "test"):
        if name == "nslkdd":
            full = NSL_TRAIN_COUNTS if split == "train" else NSL_TEST_COUNTS
            counts = {k: max(1, round(v * scale)) for k, v in full.items()} if scale != 1.0 else None
            paths.append(write_rows(out_dir / f"nslkdd_{split}.csv", nslkdd_rows(split, seed, counts)))
        elif name == "cidds":
            full = CIDDS_TRAIN_COUNTS if split == "train" else CIDDS_TEST_COUNTS
            counts = {k: max(1, round(v * scale)) for k, v in full.items()} if scale != 1.0 else None
            paths.append(write_rows(out_dir / f"cidds_{split}.csv", cidds_rows(split, seed, counts), CIDDS_COLUMNS))
        else:
            raise ValueError(f"unknown dataset {name!r}")
    return paths[0], paths[1]
