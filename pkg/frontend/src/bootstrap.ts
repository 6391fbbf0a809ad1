/**
 * Template entry point.  The double-braced placeholders are substituted by
 * the rewrite server at startup; the bundled output of this file is the
 * shim asset it serves.
 */
import { installShim } from "./index";

installShim(window as Window & typeof globalThis, {
  middleOrigin: "{{MIDDLE_ORIGIN}}",
  firstPartyOrigin: "{{FIRST_PARTY_ORIGIN}}",
  inContextParam: "{{IN_CONTEXT_PARAM}}",
  crossContextParam: "{{CROSS_CONTEXT_PARAM}}",
  firstPartyAllowlist: "{{FIRST_PARTY_ALLOWLIST_JSON}}" as unknown as string[],
});
