/* Plain C client of the shared library. */
#include <math.h>
#include <stdio.h>
#include <string.h>

#include "nlkpp/nlkpp.h"

static int failures = 0;

#define EXPECT(cond)                                              \
  do {                                                            \
    if (!(cond)) {                                                \
      fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                 \
    }                                                             \
  } while (0)

static const char* kLK1 =
    "{\"params\": {\"kappa_plus\": 2, \"m\": 1, \"kappa_local\": 1, \"kappa_nonlocal\": 0},"
    " \"a_plus\": {\"family\": \"laplace\", \"rate\": 1}, \"a_minus\": {\"family\": \"laplace\", \"rate\": 1}}";

int main(void) {
  nlkpp_model* model = NULL;
  EXPECT(nlkpp_model_parse(kLK1, &model) == NLKPP_OK);

  double theta = 0.0;
  EXPECT(nlkpp_model_theta(model, &theta) == NLKPP_OK && theta == 1.0);

  nlkpp_dispersion d;
  EXPECT(nlkpp_minimal_speed(model, &d) == NLKPP_OK);
  EXPECT(fabs(d.lambda_star - sqrt(sqrt(5.0) - 2.0)) < 1e-9);
  EXPECT(d.kernel_class == NLKPP_CLASS_V);

  double lambda = 0.0;
  int j = 0;
  EXPECT(nlkpp_speed_to_abscissa(model, d.c_star, &lambda, &j) == NLKPP_OK && j == 2);
  EXPECT(nlkpp_speed_to_abscissa(model, 3.0, &lambda, &j) == NLKPP_NO_WAVE);
  EXPECT(strlen(nlkpp_last_error()) > 0);
  EXPECT(strcmp(nlkpp_status_name(NLKPP_NO_WAVE), "no-wave") == 0);

  nlkpp_model* bad = NULL;
  EXPECT(nlkpp_model_parse("{not json", &bad) == NLKPP_PARSE_ERROR && bad == NULL);
  EXPECT(nlkpp_minimal_speed(NULL, &d) == NLKPP_INVALID_ARGUMENT);

  char* report = NULL;
  char* blocking = NULL;
  EXPECT(nlkpp_check(model, &report, &blocking) == NLKPP_OK);
  EXPECT(report != NULL && strstr(report, "Q7") != NULL);
  EXPECT(blocking != NULL && blocking[0] == '\0');
  nlkpp_string_free(report);
  nlkpp_string_free(blocking);

  nlkpp_profile_config cfg;
  nlkpp_profile_config_default(&cfg);
  nlkpp_profile* prof = NULL;
  EXPECT(nlkpp_profile_solve(model, 4.0, &cfg, &prof) == NLKPP_OK);
  nlkpp_profile_info info;
  EXPECT(nlkpp_profile_get_info(prof, &info) == NLKPP_OK);
  EXPECT(info.residual_sup <= 1e-6 && info.multiplicity == 1);
  const double* values = NULL;
  size_t count = 0;
  EXPECT(nlkpp_profile_values(prof, &values, &count) == NLKPP_OK && count == info.size);
  EXPECT(fabs(values[0] - theta) < 1e-4 && values[count - 1] < 1e-4);
  nlkpp_profile_free(prof);

  const double radii[] = {2, 5, 10, 20, 40};
  nlkpp_truncation* trace = NULL;
  EXPECT(nlkpp_truncation_sweep(model, radii, 5, 2, &trace) == NLKPP_OK);
  nlkpp_truncation_info tinfo;
  EXPECT(nlkpp_truncation_get_info(trace, &tinfo) == NLKPP_OK);
  EXPECT(tinfo.levels == 5 && tinfo.strictly_increasing && tinfo.dominated && tinfo.final_gap <= 1e-6);
  nlkpp_truncation_free(trace);

  nlkpp_model_free(model);
  if (failures == 0) printf("C API: all checks passed (version %s)\n", nlkpp_version());
  return failures == 0 ? 0 : 1;
}
