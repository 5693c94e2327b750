"""Country and language constants for the 15-country, 12-language study design."""

# Two-letter labels follow the coefficient rows of the published comparison table.
COUNTRIES = (
    "at", "ch", "es", "fr", "ge", "gr", "ie", "il",
    "it", "nl", "no", "po", "ro", "se", "uk",
)

COUNTRY_NAMES = {
    "at": "Austria",
    "ch": "Switzerland",
    "es": "Spain",
    "fr": "France",
    "ge": "Germany",
    "gr": "Greece",
    "ie": "Ireland",
    "il": "Israel",
    "it": "Italy",
    "nl": "Netherlands",
    "no": "Norway",
    "po": "Poland",
    "ro": "Romania",
    "se": "Sweden",
    "uk": "United Kingdom",
}

# Participants per country; sums to 7286.
DEFAULT_COUNTS = {
    "at": 529,
    "fr": 528,
    "ge": 414,
    "gr": 548,
    "ie": 384,
    "il": 461,
    "it": 446,
    "nl": 377,
    "no": 433,
    "po": 549,
    "ro": 659,
    "es": 469,
    "se": 519,
    "ch": 512,
    "uk": 458,
}
DEFAULT_COUNTS = {c: DEFAULT_COUNTS[c] for c in COUNTRIES}

LANGUAGES = ("NL", "EN", "FR", "DE", "EL", "IW", "IT", "NO", "PL", "RO", "ES", "SV")

COUNTRY_LANGUAGE = {
    "nl": "NL",
    "ie": "EN",
    "uk": "EN",
    "fr": "FR",
    "at": "DE",
    "ge": "DE",
    "ch": "DE",
    "gr": "EL",
    "il": "IW",
    "it": "IT",
    "no": "NO",
    "po": "PL",
    "ro": "RO",
    "es": "ES",
    "se": "SV",
}
COUNTRY_LANGUAGE = {c: COUNTRY_LANGUAGE[c] for c in COUNTRIES}


def country_index(code):
    return COUNTRIES.index(code)
