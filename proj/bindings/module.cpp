#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tworeg/covariance.hpp"
#include "tworeg/estimators.hpp"
#include "tworeg/realdata.hpp"
#include "tworeg/simulation.hpp"

namespace py = pybind11;
using namespace tworeg;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Two-stage regularization of least-squares estimators";

    py::register_exception<Error>(m, "TworegError", PyExc_RuntimeError);

    py::enum_<EstimatorKind>(m, "EstimatorKind")
        .value("OLS", EstimatorKind::OLS)
        .value("StandardRidge", EstimatorKind::StandardRidge)
        .value("TworegRidge", EstimatorKind::TworegRidge)
        .value("NormalTworeg", EstimatorKind::NormalTworeg);

    py::enum_<CovStage>(m, "CovStage")
        .value("Crude", CovStage::Crude)
        .value("Shrunk", CovStage::Shrunk)
        .value("Normalized", CovStage::Normalized)
        .value("Prior", CovStage::Prior)
        .value("TrueKnown", CovStage::TrueKnown);

    py::enum_<StudyKind>(m, "StudyKind")
        .value("Autocorrelation", StudyKind::Autocorrelation)
        .value("RandomEffectAligned", StudyKind::RandomEffectAligned)
        .value("RandomEffectUnaligned", StudyKind::RandomEffectUnaligned);

    py::enum_<StudyMethod>(m, "StudyMethod")
        .value("OLS", StudyMethod::OLS)
        .value("StandardRidge", StudyMethod::StandardRidge)
        .value("TworegRidge", StudyMethod::TworegRidge)
        .value("CorrectTworegRidge", StudyMethod::CorrectTworegRidge);

    py::enum_<CovMetric>(m, "CovMetric")
        .value("Frobenius", CovMetric::Frobenius)
        .value("GaussianKL", CovMetric::GaussianKL);

    py::class_<Dataset>(m, "Dataset")
        .def(py::init<Eigen::MatrixXd, Eigen::VectorXd>(), py::arg("design"),
             py::arg("response"))
        .def_property_readonly("n", &Dataset::n)
        .def_property_readonly("p", &Dataset::p)
        .def_property_readonly("design", &Dataset::design)
        .def_property_readonly("response", &Dataset::response);

    py::class_<Coefficients>(m, "Coefficients")
        .def_readonly("values", &Coefficients::values)
        .def_readonly("estimator_kind", &Coefficients::estimator_kind)
        .def_readonly("lambda_", &Coefficients::lambda);

    py::class_<CovarianceMatrix>(m, "CovarianceMatrix")
        .def(py::init<Eigen::MatrixXd, CovStage>(), py::arg("entries"),
             py::arg("stage") = CovStage::Crude)
        .def_property_readonly("entries", &CovarianceMatrix::entries)
        .def_property_readonly("stage", &CovarianceMatrix::stage)
        .def_property_readonly("p", &CovarianceMatrix::p);

    py::class_<PseudoData>(m, "PseudoData")
        .def_readonly("design_tilde", &PseudoData::design_tilde)
        .def_readonly("response_tilde", &PseudoData::response_tilde);

    py::class_<GaussianPrior>(m, "GaussianPrior")
        .def(py::init<double>(), py::arg("lambda_"))
        .def_readonly("lambda_", &GaussianPrior::lambda);

    py::class_<ShrinkageParams>(m, "ShrinkageParams")
        .def(py::init<double, double>(), py::arg("kappa"), py::arg("mu"))
        .def_readonly("kappa", &ShrinkageParams::kappa)
        .def_readonly("mu", &ShrinkageParams::mu);

    py::class_<BootstrapConfig>(m, "BootstrapConfig")
        .def(py::init([](int iterations, int blocks, std::uint64_t seed) {
                 BootstrapConfig cfg;
                 cfg.iterations = iterations;
                 cfg.blocks = blocks;
                 cfg.seed = seed;
                 return cfg;
             }),
             py::arg("iterations") = 2000, py::arg("blocks") = 20, py::arg("seed") = 0)
        .def_readwrite("iterations", &BootstrapConfig::iterations)
        .def_readwrite("blocks", &BootstrapConfig::blocks)
        .def_readwrite("seed", &BootstrapConfig::seed);

    py::class_<FoldPlan>(m, "FoldPlan")
        .def_static("contiguous", &FoldPlan::contiguous, py::arg("n"), py::arg("folds"))
        .def_property_readonly("boundaries", &FoldPlan::boundaries);

    py::class_<DgpConfig>(m, "DgpConfig")
        .def(py::init<>())
        .def_readwrite("n", &DgpConfig::n)
        .def_readwrite("p", &DgpConfig::p)
        .def_readwrite("pi", &DgpConfig::pi)
        .def_readwrite("rho", &DgpConfig::rho)
        .def_readwrite("tau", &DgpConfig::tau)
        .def_readwrite("sigma2", &DgpConfig::sigma2)
        .def_readwrite("effect_var", &DgpConfig::effect_var)
        .def_readwrite("study", &DgpConfig::study)
        .def_readwrite("seed", &DgpConfig::seed);

    py::class_<GeneratedData>(m, "GeneratedData")
        .def_readonly("data", &GeneratedData::data)
        .def_readonly("true_beta", &GeneratedData::true_beta)
        .def_readonly("true_cov", &GeneratedData::true_cov);

    py::class_<StudyResult>(m, "StudyResult")
        .def_readonly("method", &StudyResult::method)
        .def_readonly("lambda_", &StudyResult::lambda)
        .def_readonly("kappa", &StudyResult::kappa)
        .def_readonly("mu", &StudyResult::mu)
        .def_readonly("mean_sq_error", &StudyResult::mean_sq_error)
        .def_readonly("std_error", &StudyResult::std_error)
        .def_readonly("mean_beta1_sq", &StudyResult::mean_beta1_sq)
        .def_readonly("beta1_sq_std_error", &StudyResult::beta1_sq_std_error)
        .def_readonly("mean_beta_sq_total", &StudyResult::mean_beta_sq_total)
        .def_readonly("replicates", &StudyResult::replicates);

    py::class_<NvarEstimate>(m, "NvarEstimate")
        .def_readonly("n", &NvarEstimate::n)
        .def_readonly("value", &NvarEstimate::value)
        .def_readonly("std_error", &NvarEstimate::std_error);

    m.def("ols_fit", &ols_fit, py::arg("data"));
    m.def("ridge_fit", &ridge_fit, py::arg("data"), py::arg("lambda_"));
    m.def("tworeg_ridge_fit", &tworeg_ridge_fit, py::arg("data"), py::arg("cov"),
          py::arg("lambda_"));
    m.def("cholesky_pseudo_data", &cholesky_pseudo_data, py::arg("beta_hat"), py::arg("cov"));
    m.def("normal_tworeg_fit", &normal_tworeg_fit, py::arg("beta_hat"), py::arg("cov"),
          py::arg("prior"));
    m.def("ridge_estimator_covariance", &ridge_estimator_covariance, py::arg("design"),
          py::arg("penalty"), py::arg("ols_cov"), py::arg("lambda_"));
    m.def("monotonicity_criterion", &monotonicity_criterion, py::arg("penalty"),
          py::arg("ols_cov"));

    m.def("block_bootstrap_cov", &block_bootstrap_cov, py::arg("data"), py::arg("cfg"),
          py::arg("workers") = 1);
    m.def("cv_hac_cov", &cv_hac_cov, py::arg("data"), py::arg("folds"));
    m.def("prior_cov", &prior_cov, py::arg("design"), py::arg("crude"));
    m.def("pca_project", &pca_project, py::arg("crude"), py::arg("prior"));
    m.def("shrink", &shrink, py::arg("crude"), py::arg("prior"), py::arg("params"));
    m.def("verify_prop41", &verify_prop41, py::arg("crude"), py::arg("prior"),
          py::arg("kappa"));
    m.def("normalize", &normalize, py::arg("shrunk"), py::arg("design"));
    m.def("select_shrinkage", &select_shrinkage, py::arg("data"), py::arg("folds"),
          py::arg("grid"), py::arg("cfg"), py::arg("metric") = CovMetric::Frobenius);
    m.def("default_shrink_grid", &default_shrink_grid);

    m.def("gen_dataset", &gen_dataset, py::arg("cfg"));
    m.def("analytic_limit", &analytic_limit, py::arg("cfg"), py::arg("fourth_moment") = 3.0);
    m.def("empirical_nvar", &empirical_nvar, py::arg("cfg"), py::arg("n_list"),
          py::arg("replicates"), py::arg("workers") = 1);
    m.def("run_study", &run_study, py::arg("cfg"), py::arg("methods"), py::arg("lambda_grid"),
          py::arg("shrink_grid"), py::arg("replicates"), py::arg("bootstrap"),
          py::arg("workers") = 1);
}
