use std::fmt;

/// Semantic type of an expression. `List` only arises from the grid /
/// record collection fields; there are no list literals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ty {
    Int,
    Float,
    Bool,
    Str,
    County,
    Grid,
    WeatherRoot,
    SpeedRoot,
    WeatherRecord,
    SpeedRecord,
    List(Box<Ty>),
}

impl Ty {
    pub fn is_numeric(&self) -> bool {
        matches!(self, Ty::Int | Ty::Float)
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self, Ty::Int | Ty::Float | Ty::Str)
    }

    /// Named types usable in declarations (`p: County`, `of float`,
    /// `[string]`, foreach/visit clause types).
    pub fn from_name(name: &str) -> Option<Ty> {
        Some(match name {
            "int" => Ty::Int,
            "float" => Ty::Float,
            "bool" => Ty::Bool,
            "string" => Ty::Str,
            "County" => Ty::County,
            "Grid" => Ty::Grid,
            "WeatherRoot" => Ty::WeatherRoot,
            "SpeedRoot" => Ty::SpeedRoot,
            "WeatherRecord" => Ty::WeatherRecord,
            "SpeedRecord" => Ty::SpeedRecord,
            _ => return None,
        })
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Int => write!(f, "int"),
            Ty::Float => write!(f, "float"),
            Ty::Bool => write!(f, "bool"),
            Ty::Str => write!(f, "string"),
            Ty::County => write!(f, "County"),
            Ty::Grid => write!(f, "Grid"),
            Ty::WeatherRoot => write!(f, "WeatherRoot"),
            Ty::SpeedRoot => write!(f, "SpeedRoot"),
            Ty::WeatherRecord => write!(f, "WeatherRecord"),
            Ty::SpeedRecord => write!(f, "SpeedRecord"),
            Ty::List(inner) => write!(f, "list of {}", inner),
        }
    }
}

/// A resolved field: canonical name (the evaluator's key), type, and
/// whether the field can be absent at run time.
pub struct FieldInfo {
    pub canonical: &'static str,
    pub ty: Ty,
    pub optional: bool,
}

/// Field table for the domain hierarchy. Aliases keep the published
/// program texts valid: `grid`/`grids`, `weather`/`weatherRecords`,
/// `speeds`/`speedRecords`, `type`/`vtype`.
pub fn field_of(recv: &Ty, name: &str) -> Option<FieldInfo> {
    let f = |canonical, ty, optional| Some(FieldInfo { canonical, ty, optional });
    match recv {
        Ty::County => match name {
            "countyCode" => f("countyCode", Ty::Str, false),
            "countyName" => f("countyName", Ty::Str, false),
            "grid" | "grids" => f("grid", Ty::List(Box::new(Ty::Grid)), false),
            _ => None,
        },
        Ty::Grid => match name {
            "id" => f("id", Ty::Int, false),
            "lat" => f("lat", Ty::Float, false),
            "lon" => f("lon", Ty::Float, false),
            "location" => f("location", Ty::Str, false),
            "weatherRoot" => f("weatherRoot", Ty::WeatherRoot, true),
            "speedRoot" => f("speedRoot", Ty::SpeedRoot, true),
            _ => None,
        },
        Ty::WeatherRoot => match name {
            "weather" | "weatherRecords" => f("weather", Ty::List(Box::new(Ty::WeatherRecord)), false),
            _ => None,
        },
        Ty::SpeedRoot => match name {
            "speeds" | "speedRecords" => f("speeds", Ty::List(Box::new(Ty::SpeedRecord)), false),
            _ => None,
        },
        Ty::WeatherRecord => match name {
            "tmpc" => f("tmpc", Ty::Float, true),
            "wawa" => f("wawa", Ty::Str, false),
            "ptype" => f("ptype", Ty::Str, false),
            "dwpc" => f("dwpc", Ty::Float, true),
            "smps" => f("smps", Ty::Float, true),
            "drct" => f("drct", Ty::Float, true),
            "vsby" => f("vsby", Ty::Float, true),
            "roadtmpc" => f("roadtmpc", Ty::Float, true),
            "srad" => f("srad", Ty::Float, true),
            "snwd" => f("snwd", Ty::Float, true),
            "pcpn" => f("pcpn", Ty::Float, true),
            "time" => f("time", Ty::Int, false),
            _ => None,
        },
        Ty::SpeedRecord => match name {
            "detectorcode" => f("detectorcode", Ty::Str, false),
            "type" | "vtype" => f("vtype", Ty::Str, false),
            "speed" => f("speed", Ty::Float, false),
            "reference" => f("reference", Ty::Float, false),
            "time" => f("time", Ty::Int, false),
            "roadname" => f("roadname", Ty::Str, false),
            _ => None,
        },
        _ => None,
    }
}
