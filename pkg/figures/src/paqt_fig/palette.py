"""Okabe-Ito colorblind-safe palette and the estimator color assignment."""

OKABE_ITO = {
    "orange": "#E69F00",
    "sky_blue": "#56B4E9",
    "bluish_green": "#009E73",
    "yellow": "#F0E442",
    "blue": "#0072B2",
    "vermillion": "#D55E00",
    "reddish_purple": "#CC79A7",
    "black": "#000000",
}

ESTIMATOR_COLORS = {
    "sgqt": OKABE_ITO["bluish_green"],
    "bme": OKABE_ITO["orange"],
    "lsf": OKABE_ITO["black"],
    "wlsf": OKABE_ITO["blue"],
}

SERIES_COLORS = [
    OKABE_ITO["blue"],
    OKABE_ITO["vermillion"],
    OKABE_ITO["bluish_green"],
    OKABE_ITO["reddish_purple"],
    OKABE_ITO["sky_blue"],
]


def estimator_color(name: str) -> str:
    return ESTIMATOR_COLORS.get(name, OKABE_ITO["reddish_purple"])
