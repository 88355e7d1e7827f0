import pytest

from xlbeam.geometry import ArrayConfig, SparseActivation
from xlbeam.channel import ChannelParams
from xlbeam.codebook import (
    build_dft_codebook,
    build_multi_beam_codebook,
    build_single_beam_codebook,
)


@pytest.fixture(scope="session")
def cfg257():
    return ArrayConfig(257, 30e9)


@pytest.fixture(scope="session")
def act16(cfg257):
    return SparseActivation.for_array(cfg257, 16)


@pytest.fixture(scope="session")
def params_default():
    return ChannelParams(
        rician_factor_db=30.0,
        n_nlos=2,
        ref_gain_db=-62.0,
        noise_power_dbm=-70.0,
        tx_power_dbm=30.0,
    )


@pytest.fixture(scope="session")
def params_los(params_default):
    import dataclasses

    return dataclasses.replace(params_default, n_nlos=0)


@pytest.fixture(scope="session")
def single_book(act16, cfg257):
    book = build_single_beam_codebook(act16, 4, cfg257)
    book.weights_matrix()
    return book


@pytest.fixture(scope="session")
def multi_book(act16, cfg257):
    book = build_multi_beam_codebook(act16, 4, cfg257)
    book.weights_matrix()
    return book


@pytest.fixture(scope="session")
def dft_book(cfg257):
    book = build_dft_codebook(cfg257, 272)
    book.weights_matrix()
    return book
