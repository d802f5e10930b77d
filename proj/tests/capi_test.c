/* Exercises the C interface as a plain C client would. */
#include <construe/construe.h>

#include <stdio.h>
#include <string.h>

static int failures = 0;

#define EXPECT(cond)                                               \
  do {                                                             \
    if (!(cond)) {                                                 \
      fprintf(stderr, "%s:%d: failed: %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                  \
    }                                                              \
  } while (0)

static void pack_path(char* buf, size_t n, const char* lang) { snprintf(buf, n, "%s/%s", CONSTRUE_PACKS_DIR, lang); }

/* Copies the string value of "key" from a flat JSON object. */
static int json_field(const char* json, const char* key, char* buf, size_t n) {
  char pattern[64];
  snprintf(pattern, sizeof pattern, "\"%s\":\"", key);
  const char* at = strstr(json, pattern);
  if (!at) return 0;
  at += strlen(pattern);
  const char* end = strchr(at, '"');
  if (!end || (size_t)(end - at) >= n) return 0;
  memcpy(buf, at, (size_t)(end - at));
  buf[end - at] = '\0';
  return 1;
}

static void test_packs(void) {
  char dir[1024];
  char* out = NULL;
  cns_pack* pack = NULL;

  pack_path(dir, sizeof dir, "fi");
  EXPECT(cns_pack_validate(dir, &out) == CNS_OK);
  EXPECT(out && strstr(out, "\"valid\": true"));
  cns_string_free(out);

  EXPECT(cns_pack_validate("/nonexistent/pack", &out) == CNS_OK);
  EXPECT(out && strstr(out, "\"valid\": false"));
  cns_string_free(out);

  EXPECT(cns_pack_open("/nonexistent/pack", &pack) == CNS_MISSING_FILE);
  EXPECT(pack == NULL);
  EXPECT(strlen(cns_last_error()) > 0);

  EXPECT(cns_pack_open(dir, &pack) == CNS_OK);
  EXPECT(strcmp(cns_pack_language(pack), "fi") == 0);

  out = NULL;
  EXPECT(cns_annotate(pack, "t", "Kaikki keinot on otettava käyntiin.", &out) == CNS_OK);
  EXPECT(out && strstr(out, "necessive-construction"));
  cns_string_free(out);

  out = NULL;
  EXPECT(cns_annotate(pack, "t", "   ", &out) != CNS_OK);
  EXPECT(out == NULL);
  EXPECT(cns_annotate(NULL, "t", "x", &out) == CNS_INVALID_ARGUMENT);

  EXPECT(cns_detect_gold(pack, NULL, &out) == CNS_OK);
  EXPECT(out && strstr(out, "sentences"));
  cns_string_free(out);
  cns_pack_close(pack);
}

static void test_simulate(void) {
  char* a = NULL;
  char* b = NULL;
  const char* spec = "{\"learners\": 20, \"constructs\": 8, \"answers\": 30, \"seed\": 3}";
  EXPECT(cns_simulate(spec, NULL, &a) == CNS_OK);
  EXPECT(cns_simulate(spec, NULL, &b) == CNS_OK);
  EXPECT(a && b && strcmp(a, b) == 0);
  cns_string_free(a);
  cns_string_free(b);
  EXPECT(cns_simulate("{not json", NULL, &a) == CNS_BAD_REQUEST);
}

static void test_service(void) {
  char config[2048], dir[1024], token[128];
  char* out = NULL;
  int status = 0;
  cns_service* svc = NULL;
  pack_path(dir, sizeof dir, "fi");
  snprintf(config, sizeof config, "{\"packs\": {\"fi\": \"%s\"}}", dir);
  EXPECT(cns_service_create(config, &svc) == CNS_OK);

  EXPECT(cns_service_handle(svc, "GET", "/api/v1/me", NULL, NULL, NULL, &status, &out) == CNS_OK);
  EXPECT(status == 401);
  cns_string_free(out);

  EXPECT(cns_service_handle(svc, "POST", "/api/v1/users", NULL, NULL, "{\"name\":\"ann\"}", &status, &out) == CNS_OK);
  EXPECT(status == 201);
  EXPECT(json_field(out, "token", token, sizeof token));
  cns_string_free(out);

  EXPECT(cns_service_handle(svc, "GET", "/api/v1/translate", "language=fi&word=otettava", token, NULL, &status,
                            &out) == CNS_OK);
  EXPECT(status == 200);
  EXPECT(out && strstr(out, "ottaa"));
  cns_string_free(out);

  EXPECT(cns_service_handle(svc, "GET", "/api/v1/progress", "language=xx", token, NULL, &status, &out) == CNS_OK);
  EXPECT(status == 400);
  EXPECT(out && strstr(out, "UnsupportedLanguage"));
  cns_string_free(out);
  cns_service_destroy(svc);

  EXPECT(cns_service_create("{\"packs\": {\"fi\": \"/nonexistent\"}}", &svc) != CNS_OK);
}

int main(void) {
  EXPECT(strlen(cns_version()) > 0);
  EXPECT(strcmp(cns_status_name(CNS_FORBIDDEN), "Forbidden") == 0);
  test_packs();
  test_simulate();
  test_service();
  if (failures) fprintf(stderr, "%d failure(s)\n", failures);
  else printf("capi: all checks passed\n");
  return failures ? 1 : 0;
}
