"""End-to-end acceptance checks.

Each test is one self-contained check with its own runtime budget where
one applies; `pytest -v` gives a single pass/fail line per check. The
last test needs externally supplied corpus joins and is skipped when the
CLAIMCAL_REAL_DATA environment variable does not point at them.
"""
import json
import math
import os
import time
from types import SimpleNamespace

import numpy as np
import pytest
from scipy.stats import beta as sbeta

from claimcal.bipartite import batch_dependency, claim_dependency
from claimcal.corpus import (InteractionKey, load_corpus, load_strengths,
                             subset_interactions)
from claimcal.evaluation import (evaluate, grouped_kfold, info_gain,
                                 policy_direction, policy_resample_lengths)
from claimcal.features import (FeatureTables, assemble, claim_features,
                               impute_median)
from claimcal.learn import (Standardizer, forest_to_json, logit_to_json,
                            train_forest, train_logit_l1)
from claimcal.partition import (BetaPosterior, ClassLabel, optimize_thresholds,
                                partition_classes, wasserstein_beta)
from claimcal.rng import derive_rng
from claimcal.synth import GenConfig, brute_force_reference, generate_corpus


@pytest.fixture(scope="module")
def base_corpus():
    t0 = time.monotonic()
    corpus, strengths, labels = generate_corpus(GenConfig(seed=0))
    return SimpleNamespace(corpus=corpus, strengths=strengths, labels=labels,
                           build_seconds=time.monotonic() - t0)


@pytest.fixture(scope="module")
def planted(base_corpus):
    t0 = time.monotonic()
    tabs = assemble(base_corpus.corpus, base_corpus.labels, seed=0)
    plan = grouped_kfold(sorted(base_corpus.corpus.interactions),
                         repeats=20, k=3, seed=0)
    return SimpleNamespace(tabs=tabs, plan=plan,
                           build_seconds=(base_corpus.build_seconds
                                          + time.monotonic() - t0))


# ---------------------------------------------------------------------------
# 1. Worked dependency examples on the four-author batch

def test_worked_dependency_examples_exact(worked_graph):
    t0 = time.monotonic()
    got = batch_dependency(worked_graph, f=0.5, lam=1.0)
    assert abs(got - 2.5 / 3.0) < 1e-12
    assert claim_dependency(worked_graph, "c1") == pytest.approx(0.5,
                                                                 abs=1e-12)
    assert claim_dependency(worked_graph, "p3") == pytest.approx(0.5,
                                                                 abs=1e-12)
    assert time.monotonic() - t0 < 0.1


# ---------------------------------------------------------------------------
# 2. Distribution-distance quadrature against a dense midpoint oracle

def _riemann_w(a1, b1, a2, b2, n=1_000_000):
    xs = (np.arange(n) + 0.5) / n
    return float(np.abs(sbeta.cdf(xs, a1, b1) - sbeta.cdf(xs, a2, b2)).mean())


def test_wasserstein_matches_million_point_riemann():
    t0 = time.monotonic()
    third = wasserstein_beta(BetaPosterior(2, 1), BetaPosterior(1, 2))
    sixth = wasserstein_beta(BetaPosterior(1, 1), BetaPosterior(2, 1))
    assert abs(third - 1.0 / 3.0) < 1e-8
    assert abs(sixth - 1.0 / 6.0) < 1e-8

    # The reference column holds million-point midpoint sums of
    # |F_p - F_q|, precomputed once: two full CDF sweeps per pair cost
    # about 0.6 s on one core, which would blow this check's whole time
    # budget a dozen times over. The pairs are replayed from the seeded
    # stream, and two rows are recomputed in full here so the frozen
    # numbers stay tied to the derivation.
    rng = derive_rng(0, "w2-acceptance")
    for row, (a1, b1, a2, b2, ref) in zip(rng.uniform(0.5, 50.0, (100, 4)),
                                          RIEMANN_TABLE):
        assert np.allclose(row, (a1, b1, a2, b2), rtol=0, atol=1e-12)
        got = wasserstein_beta(BetaPosterior(a1, b1), BetaPosterior(a2, b2))
        assert abs(got - ref) <= 1e-6, (a1, b1, a2, b2)
    for idx in (0, 57):
        a1, b1, a2, b2, ref = RIEMANN_TABLE[idx]
        assert abs(_riemann_w(a1, b1, a2, b2) - ref) < 1e-12
    assert time.monotonic() - t0 < 10.0


# ---------------------------------------------------------------------------
# 3. Threshold recovery on wide synthetic corpora

def test_threshold_recovery_ten_seeds():
    t0 = time.monotonic()
    # true bands end/start at 0.25/0.35 and 0.65/0.75; any boundary in a
    # band gap is consistent, plus one 0.001 grid step of slack
    lo, hi = 0.25 - 0.001, 0.35 + 0.001
    for seed in range(10):
        corpus, strengths, _ = generate_corpus(
            GenConfig(n_interactions=4000, seed=seed))
        th, diag = optimize_thresholds(corpus, strengths)
        assert lo <= th.theta_minus <= hi, (seed, th)
        assert lo <= th.theta_plus <= hi, (seed, th)
        assert diag["objective"] > 0
    assert time.monotonic() - t0 < 60.0


# ---------------------------------------------------------------------------
# 4. Every claim feature against the enumeration oracle

def _random_slice(corpus, rng):
    target = int(rng.integers(50, 201))
    keys = sorted(corpus.interactions)
    picked, total = [], 0
    for idx in rng.permutation(len(keys)):
        key = keys[int(idx)]
        n = len(corpus.interactions[key].claims)
        if total + n > 200:
            continue
        picked.append(key)
        total += n
        if total >= target:
            break
    return subset_interactions(corpus, picked)


def test_claim_features_match_enumeration(base_corpus):
    t0 = time.monotonic()
    compared = set()
    for i in range(20):
        sub = _random_slice(base_corpus.corpus, derive_rng(7, "slice", i))
        assert 50 <= sub.n_claims() <= 200
        ref = brute_force_reference(sub, seed=0)
        got = claim_features(sub, seed=0)
        assert list(ref.index) == list(got.index)
        for col in ref.columns:
            a = ref[col].to_numpy(dtype=float)
            b = got[col].to_numpy(dtype=float)
            ok = (np.isnan(a) & np.isnan(b)) | (np.abs(a - b) <= 1e-9)
            assert ok.all(), (i, col)
            compared.add(col)
    for prefix in ("deg_", "IPS_", "IPP_", "CP_", "CD_", "FLAT_", "NW_",
                   "NHI_", "CDEP_", "BDEP_", "CCN_", "CSI_", "CSA_"):
        assert any(c.startswith(prefix) for c in compared), prefix
    for exact in ("MCP", "AMMCP", "dyear", "year_off"):
        assert exact in compared
    assert base_corpus.build_seconds + time.monotonic() - t0 < 120.0


# ---------------------------------------------------------------------------
# 5. Grouped-fold learning floors, permutation null, leakage audit

def test_grouped_cv_auc_floors_and_leakage(base_corpus, planted):
    t0 = time.monotonic()
    corpus, labels = base_corpus.corpus, base_corpus.labels
    tabs, plan = planted.tabs, planted.plan

    n_splits = 0
    for _, _, train, test in plan.splits():
        n_splits += 1
        assert not set(train) & set(test)
        assert set(train) | set(test) == set(plan.interactions)
    assert n_splits == 60

    rep_neu = evaluate(corpus, tabs, "neutral", plan)
    assert rep_neu.n_folds == 60
    assert rep_neu.auc_mean >= 0.85, rep_neu.auc_mean

    rep_pb = evaluate(corpus, tabs, "positive_bayes", plan)
    assert rep_pb.auc_mean >= 0.80, rep_pb.auc_mean

    keys = sorted(labels)
    vals = [labels[k] for k in keys]
    perm = derive_rng(0, "permute-null").permutation(len(keys))
    plabels = {k: vals[perm[i]] for i, k in enumerate(keys)}
    ptabs = FeatureTables(interaction=tabs.interaction, claim=tabs.claim,
                          labels=plabels)
    rep_null = evaluate(corpus, ptabs, "neutral", plan)
    assert 0.45 <= rep_null.auc_mean <= 0.55, rep_null.auc_mean
    assert planted.build_seconds + time.monotonic() - t0 < 300.0


# ---------------------------------------------------------------------------
# 6. Default model shapes, read back from their dumps

def test_dumped_model_structure(base_corpus, planted):
    tabs = planted.tabs
    labels = base_corpus.labels
    X, _ = impute_median(tabs.interaction, tabs.interaction)
    names = list(tabs.interaction.columns)
    y = np.array([1.0 if labels[k] is ClassLabel.NEUTRAL else 0.0
                  for k in sorted(labels)])

    forest = json.loads(forest_to_json(
        train_forest(X, y, seed=0, feature_names=names)))
    assert forest["n_trees"] == 100
    assert len(forest["trees"]) == 100
    assert forest["depth"] == 2
    assert forest["min_leaf"] == math.ceil(0.02 * len(y))

    def depth(node):
        if node["leaf"]:
            return 0
        return 1 + max(depth(node["left"]), depth(node["right"]))

    assert all(depth(t) <= 2 for t in forest["trees"])

    std = Standardizer.fit(X)
    logit = json.loads(logit_to_json(
        train_logit_l1(std.transform(X), y, seed=0, feature_names=names)))
    assert logit["n_nonzero"] == 5
    assert sum(1 for w in logit["weights"].values() if w != 0.0) == 5


# ---------------------------------------------------------------------------
# 7. Flatter claim-count distributions score higher

def test_flatter_claim_counts_score_higher(base_corpus):
    t0 = time.monotonic()
    corpus, labels = base_corpus.corpus, base_corpus.labels
    betas = [2.0, 2.2, 2.35, 2.65, 2.85]
    auc_s, ig_s, gammas = [], [], []
    for beta in betas:
        sub = policy_resample_lengths(corpus, beta, seed=0)
        gammas.append(sub.ingest_report["resample_gamma"])
        tabs = assemble(sub, labels, seed=0)
        plan = grouped_kfold(sorted(sub.interactions), repeats=8, k=3, seed=0)
        rep = evaluate(sub, tabs, "positive_bayes", plan)
        auc_s.append(rep.auc_samples)
        ig_s.append(rep.ig_samples)
    # five genuinely different resampled corpora, not repeats of one
    assert len(set(gammas)) == 5
    rho_auc, p_auc = policy_direction(betas, auc_s)
    rho_ig, p_ig = policy_direction(betas, ig_s)
    assert rho_auc > 0 and p_auc < 0.05, (rho_auc, p_auc)
    assert rho_ig > 0 and p_ig < 0.05, (rho_ig, p_ig)
    assert base_corpus.build_seconds + time.monotonic() - t0 < 600.0


# ---------------------------------------------------------------------------
# 8. Information-gain reference points

def test_info_gain_reference_points():
    assert info_gain([0.5, 0.5, 0.5]) == 0.0
    assert info_gain([0.0, 1.0, 0.0]) == 1.0
    assert abs(info_gain([0.9] * 8) - 0.531) < 1e-3


# ---------------------------------------------------------------------------
# 9. Real-corpus reproduction (needs externally supplied joins)

REAL_DATA = os.environ.get("CLAIMCAL_REAL_DATA", "")

REAL_EXPECTATIONS = {
    "geneways": (0.305, 0.218, 2476, 580),
    "literome": (0.256, 0.157, 2720, 1090),
}


@pytest.mark.skipif(not REAL_DATA,
                    reason="set CLAIMCAL_REAL_DATA to the directory holding"
                           " the geneways/ and literome/ corpus joins")
def test_real_corpus_thresholds_and_selection():
    for name, (tm, tp, n_claims, n_inter) in REAL_EXPECTATIONS.items():
        d = os.path.join(REAL_DATA, name)
        corpus = load_corpus(os.path.join(d, "claims.tsv"),
                             os.path.join(d, "publications.jsonl"))
        strengths = load_strengths(os.path.join(d, "strengths.tsv"))
        th, _ = optimize_thresholds(corpus, strengths)
        assert abs(th.theta_minus - tm) <= 0.001, (name, th)
        assert abs(th.theta_plus - tp) <= 0.001, (name, th)
        labels = partition_classes(strengths, th)
        picked = [k for k, v in labels.items()
                  if v is not ClassLabel.NEUTRAL]
        assert len(picked) == n_inter, name
        total = sum(len(corpus.interactions[k].claims) for k in picked)
        assert total == n_claims, name


RIEMANN_TABLE = [
    (15.634615221994437, 36.20814211228235, 10.513379652761548, 29.721368033937566, 0.0402766304212988),
    (37.72347737251207, 4.018205490463627, 8.219540712475498, 25.603975006166745, 0.6607237737610744),
    (0.8993405806508792, 15.635672188997681, 42.529613969635975, 24.35959285513914, 0.5814316966267749),
    (8.764479720657045, 45.018662415760836, 25.478006928068996, 30.178477550499398, 0.29481287272750084),
    (3.8315781028338627, 19.869216749018502, 7.820884793694577, 48.73850725215455, 0.027251436287701835),
    (42.62184090600742, 24.93324420250839, 20.804428074362228, 6.790676315813874, 0.12299877784703907),
    (6.5788459996508175, 34.692844528341, 26.985574475635797, 14.750549512175873, 0.4871726044695644),
    (8.598613434115215, 8.106993096697831, 4.568000138148034, 45.83691776549482, 0.42408815159718366),
    (47.13324521458259, 45.75083452812679, 14.723940228674628, 19.388546007139112, 0.0760621228435478),
    (48.29052113680451, 5.283394310599817, 11.795625020359653, 12.936587886717952, 0.4244475495519435),
    (10.04658954103497, 11.078399141308648, 3.8373878263503243, 6.081825595726678, 0.08977736903218334),
    (44.15314334638318, 8.559764034122475, 16.356289001552184, 13.410002427058501, 0.2881250865839409),
    (25.690684022055194, 43.04482563249717, 36.75911668235618, 5.779130354596472, 0.49038127043546975),
    (1.4001660752966216, 7.328887338853438, 15.49521189807151, 18.400174253139486, 0.2967465941087465),
    (12.739616903953474, 33.567026333593866, 9.54224038794645, 2.5946775918807488, 0.5111018668257785),
    (17.788170912370582, 5.0246862836306185, 9.38814153502708, 7.537571287652025, 0.22507580385321013),
    (14.962690747776152, 44.412991667751136, 31.15469270099625, 29.32217799295052, 0.26315022546913336),
    (16.042580452987366, 3.6179356518127777, 4.9674279893986295, 24.639668412679303, 0.648201330200881),
    (36.68392382330366, 39.819804490513945, 10.043338027851151, 15.209176164703157, 0.08253807885219565),
    (19.889794035255658, 34.78925664407361, 44.73121492622086, 47.35954611884357, 0.12197437769690841),
    (49.92246644152799, 15.420609764988964, 45.68972977269272, 36.72669941791984, 0.20962897318233345),
    (20.238247796053578, 40.45052743494594, 7.523404563969756, 8.001647448328457, 0.15125469540148004),
    (46.43142251476251, 35.64232904213614, 45.605592139116304, 0.5768916032268184, 0.4217803940053158),
    (24.605956095991136, 39.82120966554116, 18.00476128888929, 29.705333798021453, 0.008575350238168291),
    (16.311701525334193, 26.86620309442161, 42.12462651652953, 18.89740129744321, 0.3125394608191729),
    (7.306756624403713, 1.0437615060368328, 21.541075354640995, 39.49330171778921, 0.5220728945268198),
    (44.28971788828825, 46.942951959020554, 47.28264466619674, 44.06534440327085, 0.032151162352604575),
    (25.838303022664086, 33.8343883566758, 43.79346591086416, 44.40419206494723, 0.06353727822530826),
    (30.30317333235801, 31.052499450568646, 34.164400511807514, 44.05556317167069, 0.057120174190856965),
    (46.27277973855626, 8.579331395705047, 18.5533058852128, 44.61463713654587, 0.5498776444163331),
    (2.7927659644182783, 8.701153074201752, 33.33768336472343, 43.63967803588172, 0.19084392312527984),
    (39.93988757523808, 3.9322775311621148, 25.363710567939744, 28.413511501292167, 0.4387255298065656),
    (4.7960476984309075, 25.13647549111548, 10.02042131396488, 10.176744824396453, 0.33590141604703583),
    (35.13318753978889, 44.08322709459242, 34.774258141931455, 13.037276308074395, 0.2838105001952493),
    (28.468638722725416, 20.72426063657858, 14.485624739348431, 33.66473889675919, 0.2778729494103755),
    (34.903856596810144, 0.6222010857144871, 5.102808726994988, 14.20373338875665, 0.7181814212425522),
    (48.85994714287016, 35.17052329106997, 49.67907475606986, 23.61983547563737, 0.09630495460094154),
    (27.889858400854617, 24.84999295621994, 2.202942021827149, 19.75951841214658, 0.42851455218909895),
    (43.04690331637423, 2.757548972138471, 5.87114975088419, 44.95241216014365, 0.8242771258212682),
    (19.11746226377698, 5.5845162227559895, 4.757355244202336, 43.908377591080836, 0.6761685839623605),
    (36.069376788939664, 7.240612043534737, 4.209872656785207, 3.2285608950504963, 0.2668610297038188),
    (19.739626399499144, 18.167822097259712, 1.4541942717599563, 21.101900599168737, 0.4562620043184164),
    (4.430555224050915, 21.59337304396484, 26.671196435803765, 44.020772317202294, 0.2070382172706357),
    (39.913741963114845, 0.9459790311215975, 38.16626527696953, 23.811990714991364, 0.3610472367519736),
    (37.5300024041365, 16.50543419711105, 22.94233068552049, 18.368410653765295, 0.13918432494388122),
    (32.14171927317072, 25.101169412144557, 1.7427220338463, 7.121362110411627, 0.3648944189068957),
    (43.968608100754, 29.697815960179863, 14.88049169814237, 34.61905102675676, 0.29624212814847495),
    (46.02927241221081, 40.16403324337104, 13.473011795984368, 42.03336729931111, 0.2912946808287958),
    (6.593941620973961, 8.62541818936532, 14.536431045166156, 2.2942237332443476, 0.4304276733283477),
    (11.998270941284796, 34.023353276903734, 28.752023921388826, 5.178759945462848, 0.5866633977363412),
    (10.514195494211526, 33.01231950512207, 7.7326191538827755, 27.664551639291144, 0.02310867990481184),
    (27.82767107633905, 3.2661489382524156, 22.78896470175747, 47.68188575664783, 0.571576826262293),
    (9.676538292841489, 42.075707332218485, 38.16664092265812, 28.99913857607801, 0.38126720222955734),
    (9.671563531213419, 43.56861184580742, 24.918404275392287, 40.31947145934856, 0.20030310429566414),
    (8.73722967668124, 12.266306395431458, 22.79359119135464, 15.478270089751408, 0.17958198032828102),
    (17.192105109876227, 29.55686995247644, 41.162108060969494, 39.321774854323955, 0.14367930364295936),
    (37.96847078353681, 23.980799637638, 13.435904744286322, 46.28588339749549, 0.38792124942717304),
    (33.38051970356702, 36.22437622233138, 18.925609031831257, 2.7903737434701665, 0.391934555066043),
    (31.511003754687128, 41.05467589836426, 48.90058278002033, 5.534764471933557, 0.46408292746089447),
    (41.1433944629316, 40.00696732895625, 19.61368569441003, 29.005984518670015, 0.10359147979046092),
    (4.717713483138039, 34.714714997639234, 3.256449390122306, 17.366369161097783, 0.038385149457340284),
    (45.7335949612426, 36.20244233981884, 28.2644420630314, 33.75049556335114, 0.10239386288650279),
    (2.8402825588008205, 19.123020041327436, 17.166405479335886, 25.863760579330375, 0.2696193962347891),
    (21.437021898911652, 34.2679021075825, 19.812076643371782, 43.114047110723426, 0.06998511485546162),
    (34.758495837595525, 36.91105533116287, 43.13673432399302, 42.393249346052045, 0.01936367246056875),
    (26.411713327740436, 16.4228165336337, 10.397586996683577, 39.551552020395164, 0.4084351630508499),
    (26.999929022954564, 13.135183253657175, 43.54898804896875, 47.18894786255501, 0.19278342882692606),
    (36.5661803531432, 11.542380651742553, 17.692491043507637, 46.89979363423531, 0.48616608467443845),
    (3.8807710040255716, 16.226041869548105, 20.902084846632818, 32.667375027286155, 0.19717883336705988),
    (6.510089710677556, 48.00310274401232, 33.143834419521426, 13.781793329781618, 0.5868833365347622),
    (14.798784912239617, 36.843863267962604, 46.47475954883836, 1.3521478622252614, 0.685166992467626),
    (3.1555405029489942, 27.145791203847484, 22.197502653108895, 5.791297627142541, 0.6889465040772091),
    (32.34666203116669, 24.513778485837065, 7.221369470030607, 2.2466933167174012, 0.19477671362150448),
    (26.299015556326047, 35.5690305310611, 42.497053033835435, 2.370041080678904, 0.5220940394900861),
    (8.992419171346965, 0.8362568411614755, 28.48005018642677, 7.044662421873095, 0.11393533539586101),
    (41.079064556841395, 43.98824272300654, 39.71692054544105, 4.8216142110332045, 0.40884213675204634),
    (32.9805445988247, 29.741055663415086, 22.49485860847708, 33.28462680690589, 0.12254241720654309),
    (35.56334873793753, 20.87417911373119, 10.432474502369047, 7.837871100222566, 0.06383646189157231),
    (36.86768962804429, 14.757328679589154, 24.01510622856647, 25.798545718921424, 0.23204496741233555),
    (23.396243644156254, 44.83050123596851, 46.23628222034623, 30.790834099125416, 0.2573408612322976),
    (36.93397526823033, 15.661032080633628, 45.28502829779645, 6.479016320324802, 0.1726021015016423),
    (12.261477167629506, 24.883459611433455, 17.68608916382958, 4.42752213416731, 0.4696847340809501),
    (8.644289587957983, 5.3801689471124705, 30.775393611649655, 39.723404270219206, 0.18008318256935707),
    (18.418716154373442, 9.104971558736537, 26.92531092031291, 39.23817727290157, 0.2622438709780278),
    (38.997054436935024, 38.49864469769058, 14.570622739765245, 16.06436164995997, 0.035015324920089935),
    (4.1071870666808525, 9.536087909379646, 48.263935757518915, 12.558411774269551, 0.4924819259653684),
    (37.29862488708163, 12.292401938695122, 46.24711374148582, 40.876375684883236, 0.22130191184790665),
    (19.61255304508431, 31.797901415480062, 42.16598449181141, 17.39273109944508, 0.3264837812453331),
    (45.6934873461666, 32.31090932932684, 18.37471363346359, 16.645663659602757, 0.06129808165597242),
    (16.768192826014815, 28.363304310189662, 20.6919104078317, 3.3859334174552367, 0.48783474921246145),
    (44.310777670145306, 19.60616032178195, 1.4654601616272516, 29.962348181744716, 0.6466262286500135),
    (47.87052052290512, 18.245677070253535, 14.67789701623103, 38.45200281495539, 0.4477718551513915),
    (30.960388027540677, 11.15095685015935, 49.426760258968386, 37.08666078448043, 0.16388403315205227),
    (12.181214185379856, 7.917014794630795, 14.38186335488949, 44.397291485136584, 0.3614077059151796),
    (34.19312408919214, 9.037042761527578, 28.519184087353306, 22.64383465061437, 0.2335372409878562),
    (46.09917780453412, 39.33857535567107, 48.27224203486855, 21.836454452742583, 0.14896980568961268),
    (16.406636041038375, 45.868971544994054, 1.8024400281472923, 41.540637517818276, 0.22186662417949377),
    (49.96844874034121, 11.381407496239, 9.10608681290813, 23.58463857848353, 0.5359309427343575),
    (48.77158635993282, 20.197560542462696, 27.16254823350174, 44.347569908013014, 0.32730875770675233),
    (17.629162703326518, 7.625028464176716, 19.691650816427153, 38.3757383352055, 0.35895158447090636),
]
