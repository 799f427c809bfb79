"""Exception hierarchy shared across the toolkit.

Errors are split into three families that map onto the CLI exit codes:
usage problems (exit 1), data validation failures (exit 2) and numerical
failures (exit 3). Every exception carries a short machine-readable code.
"""


class TrendforgeError(Exception):
    code = "Error"

    def __init__(self, message=""):
        super().__init__(message)
        self.message = message

    def __str__(self):
        return self.message or self.code


class UsageError(TrendforgeError):
    code = "UsageError"


class DataError(TrendforgeError):
    """Base for input-validation failures (CLI exit code 2)."""

    code = "DataError"


class NumericalError(TrendforgeError):
    """Base for numerical failures (CLI exit code 3)."""

    code = "NumericalError"


# --- datastore ---------------------------------------------------------


class MalformedLine(DataError):
    code = "MalformedLine"

    def __init__(self, line_no, detail=""):
        super().__init__(f"line {line_no}: {detail}".rstrip(": "))
        self.line_no = line_no


class DuplicateTweetId(DataError):
    code = "DuplicateTweetId"

    def __init__(self, tweet_id):
        super().__init__(f"tweet_id {tweet_id} appears more than once")
        self.tweet_id = tweet_id


class DanglingRetweetRoot(DataError):
    code = "DanglingRetweetRoot"

    def __init__(self, tweet_id, root_id):
        super().__init__(
            f"retweet {tweet_id} references root {root_id}, which is not an "
            f"original tweet in the same hashtag"
        )
        self.tweet_id = tweet_id
        self.root_id = root_id


class BadMagic(DataError):
    code = "BadMagic"


class DimMismatch(DataError):
    code = "DimMismatch"


class NonUnitVector(DataError):
    code = "NonUnitVector"

    def __init__(self, tweet_id, norm):
        super().__init__(f"embedding for tweet {tweet_id} has norm {norm!r}")
        self.tweet_id = tweet_id
        self.norm = norm


class DatasetInvariantError(DataError):
    code = "DatasetInvariant"


# --- cascade -----------------------------------------------------------


class RootNotOriginal(DataError):
    code = "RootNotOriginal"

    def __init__(self, tweet_id):
        super().__init__(f"cascade root {tweet_id} is not an original tweet")
        self.tweet_id = tweet_id


# --- exposure ----------------------------------------------------------


class UserNotInDataset(DataError):
    code = "UserNotInDataset"

    def __init__(self, user_id):
        super().__init__(f"user {user_id} authored no tweet in this hashtag")
        self.user_id = user_id


class NoFollowers(DataError):
    code = "NoFollowers"

    def __init__(self, user_id):
        super().__init__(f"user {user_id} has no followers in the graph")
        self.user_id = user_id


# --- tpr ---------------------------------------------------------------


class HashtagTooSmall(DataError):
    code = "HashtagTooSmall"

    def __init__(self, n, minimum):
        super().__init__(
            f"hashtag has {n} unique tweets, below the minimum of {minimum}"
        )
        self.n = n
        self.minimum = minimum


class MissingEmbedding(DataError):
    code = "MissingEmbedding"

    def __init__(self, tweet_id):
        super().__init__(f"no embedding row for tweet {tweet_id}")
        self.tweet_id = tweet_id


class DegenerateTemplateFraction(DataError):
    code = "DegenerateTemplateFraction"


class NotEnoughTemplates(DataError):
    code = "NotEnoughTemplates"


# --- causal ------------------------------------------------------------


class NoTrendingInterval(DataError):
    code = "NoTrendingInterval"

    def __init__(self, hashtag):
        super().__init__(f"hashtag {hashtag} has no trending interval")
        self.hashtag = hashtag


class EmptyPanel(DataError):
    code = "EmptyPanel"


class RankDeficient(NumericalError):
    code = "RankDeficient"

    def __init__(self, terms):
        super().__init__(f"design matrix is rank deficient in terms: {terms}")
        self.terms = terms


class NotConverged(NumericalError):
    code = "NotConverged"

    def __init__(self, iterations):
        super().__init__(f"IRLS did not converge after {iterations} iterations")
        self.iterations = iterations


class SeparationSuspected(NumericalError):
    code = "SeparationSuspected"

    def __init__(self, term, value):
        super().__init__(
            f"coefficient for {term} is {value:.2f}; quasi-separation suspected"
        )
        self.term = term
        self.value = value


class TermMissing(UsageError):
    code = "TermMissing"

    def __init__(self, term):
        super().__init__(f"term {term!r} not present in fit")
        self.term = term


# --- simgen ------------------------------------------------------------


class ConfigInvalid(UsageError):
    code = "ConfigInvalid"
