"""Exception hierarchy shared by every stage of the analysis."""


class PrivacyAnalysisError(Exception):
    """Base class for everything this package raises on purpose."""


# -- dataset ---------------------------------------------------------------

class DatasetError(PrivacyAnalysisError):
    pass


class FileMissing(DatasetError):
    def __init__(self, path):
        super().__init__(f"dataset file not found: {path}")
        self.path = path


class ParseError(DatasetError):
    def __init__(self, path, line, reason):
        super().__init__(f"{path}:{line}: {reason}")
        self.path = path
        self.line = line
        self.reason = reason


class DuplicateEntry(DatasetError):
    def __init__(self, key):
        super().__init__(f"duplicate dataset entry: {key}")
        self.key = key


class UnknownLevel(DatasetError):
    def __init__(self, name):
        super().__init__(f"unknown privacy level: {name!r}")
        self.name = name


class InvalidDataset(DatasetError):
    """Raised by the loader when the validation report contains errors."""

    def __init__(self, report):
        super().__init__("invalid dataset: " + "; ".join(report.errors))
        self.report = report


class ZeroDenominator(DatasetError):
    def __init__(self, table):
        super().__init__(f"{table} weight total is zero; dataset cannot be used for scoring")
        self.table = table


# -- manifest --------------------------------------------------------------

class ManifestError(PrivacyAnalysisError):
    pass


class MalformedXml(ManifestError):
    def __init__(self, position, reason="malformed XML"):
        super().__init__(f"{reason} at {position}")
        self.position = position
        self.reason = reason


class BinaryManifest(ManifestError):
    def __init__(self):
        super().__init__("binary AXML manifest; decompile the APK to obtain a textual AndroidManifest.xml")


class MissingNameAttribute(ManifestError):
    def __init__(self, index):
        super().__init__(f"uses-permission element #{index} has no android:name attribute")
        self.index = index


# -- bundle / scanner ------------------------------------------------------

class BundleError(PrivacyAnalysisError):
    pass


class BundleIncomplete(BundleError):
    def __init__(self, missing):
        super().__init__(f"bundle is missing {missing}")
        self.missing = missing


class InvalidBundle(BundleError):
    pass


class EmptySourceTree(BundleError):
    def __init__(self, path):
        super().__init__(f"no source files under {path}; decompilation probably failed")
        self.path = path


# -- pipeline --------------------------------------------------------------

class DecompilerMissing(PrivacyAnalysisError):
    def __init__(self, command):
        super().__init__(f"decompiler executable not found: {command}")
        self.command = command


class DecompilerFailed(PrivacyAnalysisError):
    def __init__(self, returncode, stderr=""):
        super().__init__(f"decompiler exited with status {returncode}: {stderr.strip()[:500]}")
        self.returncode = returncode
        self.stderr = stderr


class AnalysisFailure(PrivacyAnalysisError):
    """Wraps a stage failure so callers can report which stage broke."""

    def __init__(self, stage, cause):
        super().__init__(f"{stage} failed: {cause}")
        self.stage = stage
        self.cause = cause


# -- app store -------------------------------------------------------------

class StoreError(PrivacyAnalysisError):
    phase = "store"
    code = "store_error"


class TransportError(StoreError):
    phase = "transport"
    code = "store_unreachable"


class AuthFailed(StoreError):
    phase = "auth"
    code = "auth_failed"


class AppNotFound(StoreError):
    phase = "details"
    code = "app_not_found"


class NotFree(StoreError):
    phase = "free_check"
    code = "not_free"


class PurchaseFailed(StoreError):
    phase = "purchase"
    code = "purchase_failed"


class DeliveryFailed(StoreError):
    phase = "delivery"
    code = "delivery_failed"


class DownloadFailed(StoreError):
    phase = "download"
    code = "download_failed"


class NotAuthenticated(StoreError):
    phase = "auth"
    code = "not_authenticated"


# -- server ----------------------------------------------------------------

class StorageUnavailable(PrivacyAnalysisError):
    pass
