from .mesh import s3_mesh, write_mesh_csv
from .s3 import (
    CaseTag,
    ContinuumDescriptor,
    PreimageSet,
    QubitDensityParams,
    S3Point,
    classify,
    rho_from_s3,
    sqrt_preimages,
    xi_from_s3,
)
