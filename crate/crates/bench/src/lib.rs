//! Inputs shared by the benchmarks in `benches/`.

use subcorr::decomp::{make_index_split, make_stripes};
use subcorr::experiments::{gaussian_l1, image_2d};
use subcorr::{LinearMap, PsiKind, SolveProblem, StripeSpec};

/// 64x64 inpainting problem split into `count` row stripes with the default band.
pub fn inpainting_64(count: usize) -> SolveProblem {
    let im = image_2d(64, 64, 8, 0.05, 1).expect("valid image size");
    let dims = im.image.dims();
    SolveProblem::new(LinearMap::Mask(im.mask), im.image, 1e-2, PsiKind::Tv2d)
        .and_then(|p| p.with_decomposition(make_stripes(dims, count)?))
        .expect("valid problem")
        .with_stripe(StripeSpec::default())
}

/// 40x200 Gaussian recovery problem split into `count` coordinate blocks.
pub fn gaussian_200(count: usize, seed: u64) -> SolveProblem {
    let inst = gaussian_l1(40, 200, 8, 0.01, seed).expect("valid instance");
    SolveProblem::new(inst.operator, inst.data, 0.005, PsiKind::L1)
        .and_then(|p| p.with_decomposition(make_index_split(200, count)?))
        .expect("valid problem")
}
