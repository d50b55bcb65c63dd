use thiserror::Error;

/// Every failure the library can report.
///
/// Variant names double as the machine-readable error token printed by the
/// command-line front end, so `Display` always starts with the variant name.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    // cipher
    #[error("LengthNotBlockMultiple: length {0} is not a positive multiple of the block size")]
    LengthNotBlockMultiple(usize),
    #[error("EndsWithPadChar: text ends with the pad character 'z'")]
    EndsWithPadChar,
    #[error("EmptyInput: nothing to encrypt")]
    EmptyInput,
    #[error("InvalidKey: {0:?} is not a permutation of 1..6")]
    InvalidKey(String),

    // geokey
    #[error("OutOfRangeCoordinate: {0}")]
    OutOfRangeCoordinate(f64),

    // codec
    #[error("ChunkTooLong: chunk of {0} characters exceeds the limit")]
    ChunkTooLong(usize),
    #[error("EmptyMessage: message is empty")]
    EmptyMessage,
    #[error("AlphabetViolation: character {0:?} is not printable ASCII")]
    AlphabetViolation(char),
    #[error("BadPointerSuffix: {0:?}")]
    BadPointerSuffix(String),
    #[error("MessageTooShort: {0} characters")]
    MessageTooShort(usize),
    #[error("FieldOutOfRange: {0}")]
    FieldOutOfRange(String),
    #[error("BadHeader: {0}")]
    BadHeader(String),
    #[error("AddressOutOfRange: {0}")]
    AddressOutOfRange(u32),
    #[error("LinkMismatch: {0}")]
    LinkMismatch(String),

    // store
    #[error("CorruptVault: {0}")]
    CorruptVault(String),
    #[error("StorageUnavailable: {0}")]
    StorageUnavailable(String),
    #[error("CapacityExceeded: {needed} pairs requested, {free} free")]
    CapacityExceeded { needed: usize, free: usize },
    #[error("ChunkEndsWithPad: no chunking of the message keeps the cipher halves free of a trailing 'z'")]
    ChunkEndsWithPad,
    #[error("AddressNotFound: {0}")]
    AddressNotFound(u32),
    #[error("BrokenChain: pointer to absent address {0}")]
    BrokenChain(u32),
    #[error("CycleDetected: address {0} visited twice")]
    CycleDetected(u32),
    #[error("EmptyQuery: search term is empty")]
    EmptyQuery,
    #[error("NoLocation: no current location fix recorded")]
    NoLocation,
    #[error("NotEnrolled: vault has no pattern lock")]
    NotEnrolled,

    // lockscreen
    #[error("PatternTooShort: {0} cells, at least 4 required")]
    PatternTooShort(usize),
    #[error("DuplicateCell: cell {0} appears twice")]
    DuplicateCell(u8),
    #[error("CellOutOfRange: cell {0} is outside the 4x4 grid")]
    CellOutOfRange(u32),
    #[error("FenceInvalid: {0}")]
    FenceInvalid(String),
    #[error("PatternMismatch: pattern rejected")]
    PatternMismatch,
    #[error("LengthOutOfRange: {0}")]
    LengthOutOfRange(String),
    #[error("NoRotationPending: no pattern rotation has been proposed")]
    NoRotationPending,
    #[error("RotationPending: accept or skip the pending pattern rotation first")]
    RotationPending,

    // geosim
    #[error("TraceFormatError: line {line}: {reason}")]
    TraceFormatError { line: usize, reason: String },
    #[error("IndexOutOfRange: {0}")]
    IndexOutOfRange(usize),

    // analysis
    #[error("GridTooLarge: {cells} cells exceeds the limit of {limit}")]
    GridTooLarge { cells: u64, limit: u64 },
    #[error("InvalidGrid: {0}")]
    InvalidGrid(String),
}

impl Error {
    /// The bare variant name, e.g. `"PatternMismatch"`.
    pub fn name(&self) -> &'static str {
        use Error::*;
        match self {
            LengthNotBlockMultiple(_) => "LengthNotBlockMultiple",
            EndsWithPadChar => "EndsWithPadChar",
            EmptyInput => "EmptyInput",
            InvalidKey(_) => "InvalidKey",
            OutOfRangeCoordinate(_) => "OutOfRangeCoordinate",
            ChunkTooLong(_) => "ChunkTooLong",
            EmptyMessage => "EmptyMessage",
            AlphabetViolation(_) => "AlphabetViolation",
            BadPointerSuffix(_) => "BadPointerSuffix",
            MessageTooShort(_) => "MessageTooShort",
            FieldOutOfRange(_) => "FieldOutOfRange",
            BadHeader(_) => "BadHeader",
            AddressOutOfRange(_) => "AddressOutOfRange",
            LinkMismatch(_) => "LinkMismatch",
            CorruptVault(_) => "CorruptVault",
            StorageUnavailable(_) => "StorageUnavailable",
            CapacityExceeded { .. } => "CapacityExceeded",
            ChunkEndsWithPad => "ChunkEndsWithPad",
            AddressNotFound(_) => "AddressNotFound",
            BrokenChain(_) => "BrokenChain",
            CycleDetected(_) => "CycleDetected",
            EmptyQuery => "EmptyQuery",
            NoLocation => "NoLocation",
            NotEnrolled => "NotEnrolled",
            PatternTooShort(_) => "PatternTooShort",
            DuplicateCell(_) => "DuplicateCell",
            CellOutOfRange(_) => "CellOutOfRange",
            FenceInvalid(_) => "FenceInvalid",
            PatternMismatch => "PatternMismatch",
            LengthOutOfRange(_) => "LengthOutOfRange",
            NoRotationPending => "NoRotationPending",
            RotationPending => "RotationPending",
            TraceFormatError { .. } => "TraceFormatError",
            IndexOutOfRange(_) => "IndexOutOfRange",
            GridTooLarge { .. } => "GridTooLarge",
            InvalidGrid(_) => "InvalidGrid",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_starts_with_name() {
        let samples = [
            Error::PatternMismatch,
            Error::CapacityExceeded { needed: 1, free: 0 },
            Error::TraceFormatError { line: 2, reason: "x".into() },
            Error::InvalidKey("000000".into()),
            Error::GridTooLarge { cells: 2, limit: 1 },
        ];
        for e in samples {
            assert!(e.to_string().starts_with(e.name()), "{e}");
        }
    }
}
