//! Stored synthetic data for the inverse benchmarks. Generated by
//! `examples/gen_fixtures.rs`; do not edit by hand.

/// Noise-free beam displacement at every third node for region stiffness (1.00, 1.02, 0.98).
pub const BEAM_OBSERVATIONS: [f64; 11] = [
    0.0,
    2.3555555554842846e-5,
    8.768518518246742e-5,
    0.00018388888888306212,
    0.00030452614378098967,
    0.0004428830791429521,
    0.0005935675381063844,
    0.0007521924572041111,
    0.0009154549103275817,
    0.001080833765567367,
    0.0012467984106786416,
];

/// Noise-free membrane deflection on the 13×13 grid for the 0.8/1.25 checkerboard stiffness.
pub const MEMBRANE_OBSERVATIONS: [f64; 169] = [
    0.07987220694891498,
    0.12361343716517863,
    0.15454593514680495,
    0.19120858735931764,
    0.20481026924915002,
    0.20197250393361765,
    0.2123422613404482,
    0.21942084746974658,
    0.19646830738866203,
    0.1792864114813193,
    0.16732286818925354,
    0.12814626567355364,
    0.07273660293947706,
    0.12361343716517892,
    0.20491991224989362,
    0.2768518853930893,
    0.34194281309778485,
    0.36596598206757947,
    0.36494741987354223,
    0.3856187720421849,
    0.39292302693403547,
    0.356927156227423,
    0.31856119434052477,
    0.2899304531807643,
    0.23077774184604055,
    0.12814626567355392,
    0.15454593514680548,
    0.27685188539308864,
    0.3787725594742932,
    0.437750037488262,
    0.4787853366051569,
    0.5137293350851282,
    0.516634270258436,
    0.5045367889481442,
    0.4876952410626046,
    0.44206067656693215,
    0.369970036848857,
    0.28993045318076655,
    0.16732286818925524,
    0.19120858735931703,
    0.34194281309778185,
    0.4377500374882614,
    0.5141327828577619,
    0.575422464032527,
    0.6091746301788515,
    0.6155768607090674,
    0.60123950822289,
    0.5722749572101685,
    0.5257027631994671,
    0.44206067656693293,
    0.3185611943405283,
    0.17928641148132218,
    0.20481026924914986,
    0.36596598206757797,
    0.4787853366051559,
    0.5754224640325265,
    0.6380787706531695,
    0.6663397892143644,
    0.6815189011596188,
    0.6747603488225955,
    0.6304379773638666,
    0.5722749572101726,
    0.48769524106260875,
    0.35692715622742854,
    0.1964683073886658,
    0.20197250393361804,
    0.36494741987354173,
    0.5137293350851259,
    0.6091746301788493,
    0.6663397892143588,
    0.7081746107317267,
    0.7212972445222985,
    0.709885271094031,
    0.6747603488225933,
    0.6012395082228928,
    0.5045367889481488,
    0.39292302693404113,
    0.21942084746974969,
    0.2123422613404488,
    0.3856187720421852,
    0.5166342702584354,
    0.6155768607090635,
    0.6815189011596141,
    0.7212972445222977,
    0.733689466100949,
    0.721297244522298,
    0.6815189011596183,
    0.6155768607090669,
    0.5166342702584366,
    0.38561877204218775,
    0.21234226134045034,
    0.21942084746974816,
    0.3929230269340383,
    0.5045367889481434,
    0.601239508222886,
    0.6747603488225901,
    0.7098852710940309,
    0.7212972445222996,
    0.708174610731727,
    0.6663397892143613,
    0.6091746301788488,
    0.5137293350851249,
    0.3649474198735406,
    0.20197250393361774,
    0.19646830738866544,
    0.3569271562274259,
    0.48769524106260465,
    0.5722749572101664,
    0.6304379773638636,
    0.6747603488225927,
    0.6815189011596182,
    0.6663397892143635,
    0.6380787706531679,
    0.5754224640325227,
    0.478785336605152,
    0.3659659820675752,
    0.20481026924914802,
    0.17928641148132246,
    0.31856119434052843,
    0.4420606765669324,
    0.5257027631994663,
    0.5722749572101704,
    0.6012395082228906,
    0.6155768607090656,
    0.6091746301788492,
    0.5754224640325231,
    0.5141327828577547,
    0.43775003748825553,
    0.34194281309777863,
    0.19120858735931506,
    0.16732286818925585,
    0.28993045318076766,
    0.3699700368488594,
    0.4420606765669348,
    0.48769524106260953,
    0.5045367889481487,
    0.5166342702584386,
    0.5137293350851276,
    0.47878533660515155,
    0.437750037488255,
    0.3787725594742869,
    0.2768518853930842,
    0.1545459351468034,
    0.1281462656735554,
    0.23077774184604338,
    0.28993045318076816,
    0.318561194340531,
    0.3569271562274302,
    0.3929230269340426,
    0.38561877204218986,
    0.36494741987354323,
    0.36596598206757536,
    0.3419428130977773,
    0.27685188539308436,
    0.20491991224989065,
    0.12361343716517753,
    0.07273660293947817,
    0.12814626567355517,
    0.16732286818925626,
    0.17928641148132418,
    0.19646830738866677,
    0.21942084746975024,
    0.21234226134045056,
    0.20197250393361896,
    0.2048102692491493,
    0.191208587359315,
    0.1545459351468032,
    0.12361343716517792,
    0.07987220694891443,
];

/// Blurred piecewise-constant signal plus N(0, 0.01²) noise from seed 2024.
pub const DECONV_DATA: [f64; 128] = [
    0.024107513014343867,
    0.005468370442443938,
    0.007217494497509801,
    -0.01201053447740453,
    0.008864564664686566,
    0.007320580825589689,
    -0.007891922608487948,
    0.0012896990524255548,
    0.006745995788920801,
    0.001731950450468149,
    0.006226060171602414,
    0.00631648936866281,
    0.052378661323438186,
    0.12373209813651437,
    0.2474850116337749,
    0.39523990274761694,
    0.577188151069256,
    0.7880059244237566,
    0.9023765916402647,
    0.9649577227116032,
    0.9732451548784152,
    1.0126027912492008,
    0.9980661459631592,
    0.9930980939293718,
    1.014681860246512,
    1.0060306133876196,
    0.9909484283805142,
    0.9914928006684679,
    1.0118874566505018,
    0.9896790219734329,
    1.003438065771271,
    1.0010688848133087,
    0.9933567086338868,
    0.9960875212894801,
    1.0014372679603138,
    0.9855824552377975,
    0.9394913031836781,
    0.8771638525005865,
    0.7603947204379141,
    0.5974426533848679,
    0.3995282175483933,
    0.23274191585128925,
    0.09770048831784808,
    0.055311928662157686,
    -0.0050348086367091,
    0.002338171119845366,
    0.010131337293976526,
    -6.168353204812696e-6,
    0.006075139567616413,
    0.01598493408469774,
    0.017259241602956395,
    0.007663117014129332,
    0.01930353181055369,
    0.05375630776301425,
    0.10385582308398167,
    0.22044641831650852,
    0.2875985131098776,
    0.3874848318392646,
    0.45684481518453113,
    0.4670653190637724,
    0.48857518286809404,
    0.5132797669261766,
    0.5120155912865071,
    0.5023556068411326,
    0.5017734091165588,
    0.5031554245929053,
    0.48086562914372066,
    0.4907018129974228,
    0.4754907597171389,
    0.4462475778295606,
    0.40189098312124594,
    0.29680498459313903,
    0.1995158019314344,
    0.12095264599541847,
    0.061846302477253645,
    0.021390473854534752,
    0.006110697147318633,
    -0.005779653294660807,
    0.010820017693189046,
    0.001108223892810109,
    0.005866138157194091,
    0.001281764855519427,
    0.003881991557547755,
    0.0005402287422831397,
    -0.011536937119815068,
    -0.07467072995378495,
    -0.18231049619422893,
    -0.3059284578641168,
    -0.44413136549603377,
    -0.5806886635164049,
    -0.6517567560929194,
    -0.7242167324027334,
    -0.746955834331328,
    -0.7334027710359934,
    -0.7569184538536855,
    -0.7447715595519765,
    -0.7584097419049021,
    -0.7511552473056947,
    -0.7529195541033346,
    -0.7659710919487407,
    -0.7406372312637586,
    -0.7525808437202817,
    -0.743945606488152,
    -0.7330892525415421,
    -0.757479901776001,
    -0.735259821802266,
    -0.7408875548028933,
    -0.7364729868143921,
    -0.7260599849044339,
    -0.6778399775077302,
    -0.5720747652080291,
    -0.4448574421631797,
    -0.2929345893799187,
    -0.16263169780803147,
    -0.0695403543801393,
    -0.021239003207108857,
    -0.023507909257627673,
    -0.01766120698149552,
    0.0008815488037267468,
    0.003726086386647111,
    -0.0036219746906892094,
    0.01083769804621401,
    0.024081548768577432,
    -0.006052096769602387,
    -0.0044018529881048,
    -0.025334019196669062,
    -0.008974727204722725,
    0.015657163333411387,
];
