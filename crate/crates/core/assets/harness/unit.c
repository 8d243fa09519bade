@@PRELUDE@@
/* ---- context ---- */
@@CONTEXT@@
/* ---- original ---- */
@@ORIGINAL_FN@@
/* ---- candidate ---- */
@@CANDIDATE_FN@@
/* ---- driver ---- */
@@DRIVER@@
