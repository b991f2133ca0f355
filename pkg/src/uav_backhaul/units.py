import math


def dbm_to_watt(dbm: float) -> float:
    return 10 ** (dbm / 10) / 1000


def watt_to_dbm(watt: float) -> float:
    return 10 * math.log10(watt * 1000)


def db_to_linear(db):
    return 10 ** (db / 10)
