/**
 * Deployment constants baked into the shim when the rewrite server renders
 * the template.  They must match the servers' wire contract exactly: the
 * middle-party origin the rewritten URLs point at, and the query parameter
 * names carrying the encapsulated target.
 */
export interface ShimConfig {
  middleOrigin: string;
  firstPartyOrigin: string;
  inContextParam: string;
  crossContextParam: string;
  firstPartyAllowlist: string[];
}
